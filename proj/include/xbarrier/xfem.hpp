#pragma once

#include "xbarrier/mesh.hpp"

#include <array>
#include <span>

namespace xbarrier {

/// Bilinear basis values and spatial gradients at one point of an element.
struct ShapeValues {
  std::array<double, 4> N{};
  std::array<Vec2, 4> dN{};
  double det_jacobian = 0.0;
};

inline ShapeValues shape_functions(const Mesh &mesh, int /*e*/, const Vec2 &xi) {
  static constexpr double sx[4] = {-1.0, 1.0, 1.0, -1.0};
  static constexpr double sy[4] = {-1.0, -1.0, 1.0, 1.0};
  ShapeValues s;
  // Square elements: dx/dxi = h/2 on the diagonal.
  s.det_jacobian = 0.25 * mesh.h * mesh.h;
  if (!(s.det_jacobian > 0.0))
    throw SingularSystem("non-positive element jacobian");
  const double scale = 2.0 / mesh.h;
  for (int I = 0; I < 4; ++I) {
    s.N[I] = 0.25 * (1.0 + sx[I] * xi.x()) * (1.0 + sy[I] * xi.y());
    s.dN[I] = scale * Vec2(0.25 * sx[I] * (1.0 + sy[I] * xi.y()),
                           0.25 * sy[I] * (1.0 + sx[I] * xi.x()));
  }
  return s;
}

inline ShapeValues shape_functions_at(const Mesh &mesh, int e, const Vec2 &x) {
  return shape_functions(mesh, e, mesh.local_coords(e, x));
}

/// Shifted Heaviside enrichment [H(x) - H(x_j)] N_j(x) and its gradient.
struct EnrichedValue {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
};

inline EnrichedValue enriched_shape(double N_j, const Vec2 &dN_j, int H_x, int H_node) {
  const double shift = static_cast<double>(H_x - H_node);
  return {shift * N_j, shift * dN_j};
}

// ---------------------------------------------------------------------------
// Degrees of freedom
// ---------------------------------------------------------------------------

/// Standard DOFs occupy [0, n_std) as (2*node + component); enriched DOFs
/// follow in [n_std, n_std + n_enr) in ascending node order.
struct DofMap {
  int n_std = 0;
  int n_enr = 0;
  std::vector<int> enriched_slot; ///< per node: slot or -1
  std::vector<int> enriched_nodes;

  int size() const { return n_std + n_enr; }
  bool is_enriched(int node) const { return enriched_slot[node] >= 0; }
  int std_dof(int node, int comp) const { return 2 * node + comp; }
  int enr_dof(int node, int comp) const { return n_std + 2 * enriched_slot[node] + comp; }
};

inline DofMap build_dof_map(const Mesh &mesh, const CutClassification &c) {
  DofMap d;
  d.n_std = 2 * static_cast<int>(mesh.num_nodes());
  std::vector<char> flag(mesh.num_nodes(), 0);
  for (const auto &cut : c.cuts)
    for (int n : mesh.elements[cut.element])
      flag[n] = 1;
  d.enriched_slot.assign(mesh.num_nodes(), -1);
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    if (!flag[n])
      continue;
    d.enriched_slot[n] = static_cast<int>(d.enriched_nodes.size());
    d.enriched_nodes.push_back(static_cast<int>(n));
  }
  d.n_enr = 2 * static_cast<int>(d.enriched_nodes.size());
  return d;
}

// ---------------------------------------------------------------------------
// Jumps and displacements
// ---------------------------------------------------------------------------

/// Enriched nodal coefficients of one element, ordered like its connectivity.
inline std::array<Vec2, 4> element_enriched_coefficients(const Mesh &mesh, const DofMap &dofs,
                                                         int e, std::span<const double> X) {
  std::array<Vec2, 4> a;
  for (int I = 0; I < 4; ++I) {
    const int n = mesh.elements[e][I];
    a[I] = dofs.is_enriched(n) ? Vec2(X[dofs.enr_dof(n, 0)], X[dofs.enr_dof(n, 1)])
                               : Vec2::Zero();
  }
  return a;
}

/// Jump sum_j N_j(x) a_j for weights N evaluated at an interface point.
inline Vec2 displacement_jump(const std::array<double, 4> &N, const std::array<Vec2, 4> &a) {
  Vec2 j = Vec2::Zero();
  for (int I = 0; I < 4; ++I)
    j += N[I] * a[I];
  return j;
}

inline Vec2 displacement_jump(const Mesh &mesh, const DofMap &dofs, int e, const Vec2 &x,
                              std::span<const double> X) {
  return displacement_jump(shape_functions_at(mesh, e, x).N,
                           element_enriched_coefficients(mesh, dofs, e, X));
}

/// Full enriched expansion of u at x, taken on the given side of the interface.
inline Vec2 displacement(const Mesh &mesh, const CutClassification &c, const DofMap &dofs,
                         int e, const Vec2 &x, Side side, std::span<const double> X) {
  const ShapeValues s = shape_functions_at(mesh, e, x);
  Vec2 u = Vec2::Zero();
  for (int I = 0; I < 4; ++I) {
    const int n = mesh.elements[e][I];
    u += s.N[I] * Vec2(X[dofs.std_dof(n, 0)], X[dofs.std_dof(n, 1)]);
    if (dofs.is_enriched(n)) {
      const auto phi = enriched_shape(s.N[I], s.dN[I], heaviside(side), c.nodal_heaviside[n]);
      u += phi.value * Vec2(X[dofs.enr_dof(n, 0)], X[dofs.enr_dof(n, 1)]);
    }
  }
  return u;
}

/// Area-weighted average of the jumps at the two surface points of a cut
/// element. Both points then carry the same (piecewise-constant) jump.
inline Vec2 averaged_projection(const Vec2 &jump_q1, const Vec2 &jump_q2, double area_q1,
                                double area_q2) {
  return (area_q1 * jump_q1 + area_q2 * jump_q2) / (area_q1 + area_q2);
}

} // namespace xbarrier
