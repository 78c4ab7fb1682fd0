#pragma once

#include "xbarrier/contact.hpp"
#include "xbarrier/xfem.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace xbarrier {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

// ---------------------------------------------------------------------------
// Materials
// ---------------------------------------------------------------------------

struct Material {
  double E = 0.0;
  double nu = 0.0;
};

/// Isotropic plane-strain stiffness in Voigt order (xx, yy, xy) with
/// engineering shear strain.
inline Eigen::Matrix3d plane_strain_stiffness(const Material &m) {
  if (!(m.E > 0.0))
    throw InvalidConfig("Young's modulus must be positive");
  if (!(m.nu > -1.0) || !(m.nu < 0.5))
    throw InvalidConfig("Poisson's ratio must lie in (-1, 0.5)");
  const double f = m.E / ((1.0 + m.nu) * (1.0 - 2.0 * m.nu));
  Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
  D(0, 0) = D(1, 1) = f * (1.0 - m.nu);
  D(0, 1) = D(1, 0) = f * m.nu;
  D(2, 2) = f * (1.0 - 2.0 * m.nu) / 2.0;
  return D;
}

/// Material of the positive and negative sides of the interface.
struct MaterialPair {
  Material positive;
  Material negative;

  static MaterialPair uniform(const Material &m) { return {m, m}; }
  const Material &on(Side s) const { return s == Side::positive ? positive : negative; }
};

// ---------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------

/// Prescribed displacement at full load; scaled by the load factor.
struct DirichletBC {
  int node = 0;
  int component = 0;
  double value = 0.0;
};

/// Nodal force at full load.
struct PointLoad {
  int node = 0;
  int component = 0;
  double value = 0.0;
};

/// Uniform traction (full load) on one boundary edge of an element. Local
/// edges are numbered 0 bottom, 1 right, 2 top, 3 left.
struct TractionEdge {
  int element = 0;
  int edge = 0;
  Vec2 traction = Vec2::Zero();
};

struct BoundaryConditions {
  std::vector<DirichletBC> dirichlet;
  std::vector<TractionEdge> tractions;
  std::vector<PointLoad> point_loads;
};

// ---------------------------------------------------------------------------
// Contact settings
// ---------------------------------------------------------------------------

enum class ContactMethod { barrier, penalty, hybrid };
enum class IntegrationScheme { standard, averaged };

struct ContactSettings {
  ContactMethod method = ContactMethod::barrier;
  IntegrationScheme scheme = IntegrationScheme::standard;
  BarrierParams barrier;
  PenaltyParams penalty;

  bool barrier_normal() const { return method != ContactMethod::penalty; }
};

/// One interface integration point. `weights` are the nodal weights used for
/// both the trial jump and the test jump: N(x_Q) under the standard scheme,
/// the area-averaged N of the element's two points under the averaged one.
struct InterfacePoint {
  int element = -1;
  Vec2 x = Vec2::Zero();
  double area = 0.0;
  Vec2 normal = Vec2::Zero();
  double s = 0.0; ///< arc coordinate for profiles
  std::array<double, 4> weights{};
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct SparseSystem {
  SparseMatrix J;
  Vector R;
  std::vector<TractionState> states; ///< per interface point
};

/// A discretized embedded-interface problem: grid, cut geometry, DOF map,
/// quadrature and boundary data. Immutable after construction.
class Model {
public:
  Model(Mesh mesh, const InterfaceGeometry &geometry, MaterialPair materials,
        BoundaryConditions bcs, ContactSettings contact)
      : mesh_(std::move(mesh)), geometry_(geometry), materials_(materials),
        bcs_(std::move(bcs)), contact_(contact) {
    D_pos_ = plane_strain_stiffness(materials_.positive);
    D_neg_ = plane_strain_stiffness(materials_.negative);
    if (contact_.barrier_normal())
      contact_.barrier.validate();
    if (contact_.method != ContactMethod::barrier &&
        (!(contact_.penalty.alpha_T > 0.0) ||
         (contact_.method == ContactMethod::penalty && !(contact_.penalty.alpha_N > 0.0))))
      throw InvalidConfig("penalty parameters must be positive");
    cls_ = classify_elements(mesh_, geometry_);
    dofs_ = build_dof_map(mesh_, cls_);
    build_interface_points();
    build_constraints();
    build_bulk();
    build_external_load();
  }

  const Mesh &mesh() const { return mesh_; }
  const InterfaceGeometry &geometry() const { return geometry_; }
  const CutClassification &classification() const { return cls_; }
  const DofMap &dofs() const { return dofs_; }
  const ContactSettings &contact() const { return contact_; }
  const MaterialPair &materials() const { return materials_; }
  const BoundaryConditions &bcs() const { return bcs_; }
  const std::vector<InterfacePoint> &interface_points() const { return points_; }
  int num_dofs() const { return dofs_.size(); }

  /// Free DOFs in ascending order, and the full->reduced map (-1 if fixed).
  const std::vector<int> &free_dofs() const { return free_; }
  const std::vector<int> &reduced_index() const { return reduced_index_; }
  const std::vector<std::pair<int, double>> &constraints() const { return constraints_; }

  const SparseMatrix &bulk_stiffness() const { return K_bulk_; }
  const Vector &external_load() const { return F_ext_; }

  const Eigen::Matrix3d &D(Side s) const { return s == Side::positive ? D_pos_ : D_neg_; }

  Vec2 jump_at(std::size_t q, std::span<const double> X) const {
    const auto &p = points_[q];
    return displacement_jump(p.weights, element_enriched_coefficients(mesh_, dofs_, p.element, X));
  }

  /// Interface traction at point q for the configured contact law.
  TractionState traction_at(std::size_t q, std::span<const double> X,
                            const PenaltyHistory &hist) const {
    const Vec2 j = jump_at(q, X);
    const Vec2 &n = points_[q].normal;
    switch (contact_.method) {
    case ContactMethod::barrier:
      return update_traction(j, n, contact_.barrier);
    case ContactMethod::penalty:
      return penalty_traction(j, n, contact_.penalty, hist);
    case ContactMethod::hybrid:
      return hybrid_traction(j, n, contact_.barrier, contact_.penalty.alpha_T, hist);
    }
    return {};
  }

  /// Smallest working gap over all interface points (barrier offset included).
  double min_gap(std::span<const double> X) const {
    double g = std::numeric_limits<double>::infinity();
    const double offset = contact_.barrier_normal() ? contact_.barrier.d0 : 0.0;
    for (std::size_t q = 0; q < points_.size(); ++q)
      g = std::min(g, offset + jump_at(q, X).dot(points_[q].normal));
    return g;
  }

  /// Strain (Voigt, engineering shear) at a point on the given side of element e.
  Eigen::Vector3d strain(int e, const Vec2 &x, Side side, std::span<const double> X) const {
    const ShapeValues s = shape_functions_at(mesh_, e, x);
    Eigen::Vector3d eps = Eigen::Vector3d::Zero();
    for (int I = 0; I < 4; ++I) {
      const int n = mesh_.elements[e][I];
      auto add = [&](const Vec2 &g, const Vec2 &u) {
        eps(0) += g.x() * u.x();
        eps(1) += g.y() * u.y();
        eps(2) += g.y() * u.x() + g.x() * u.y();
      };
      add(s.dN[I], Vec2(X[dofs_.std_dof(n, 0)], X[dofs_.std_dof(n, 1)]));
      if (cls_.is_cut(e) && dofs_.is_enriched(n)) {
        const auto phi = enriched_shape(s.N[I], s.dN[I], heaviside(side), cls_.nodal_heaviside[n]);
        add(phi.gradient, Vec2(X[dofs_.enr_dof(n, 0)], X[dofs_.enr_dof(n, 1)]));
      }
    }
    return eps;
  }

  Eigen::Vector3d stress(int e, const Vec2 &x, Side side, std::span<const double> X) const {
    return D(side) * strain(e, x, side, X);
  }

  Side element_side(int e) const {
    return cls_.state[e] == ElementState::uncut_negative ? Side::negative : Side::positive;
  }

private:
  /// DOF indices of element e: 8 standard, then 8 enriched when cut.
  std::vector<int> element_dofs(int e) const {
    std::vector<int> idx;
    const auto &conn = mesh_.elements[e];
    for (int n : conn) {
      idx.push_back(dofs_.std_dof(n, 0));
      idx.push_back(dofs_.std_dof(n, 1));
    }
    if (cls_.is_cut(e))
      for (int n : conn) {
        idx.push_back(dofs_.enr_dof(n, 0));
        idx.push_back(dofs_.enr_dof(n, 1));
      }
    return idx;
  }

  void build_interface_points() {
    for (const auto &cut : cls_.cuts) {
      const auto rule = interface_segment_quadrature(cut.a, cut.b);
      if (rule.empty())
        continue;
      const Vec2 t = (cut.b - cut.a).normalized();
      const Vec2 n(-t.y(), t.x());
      std::vector<InterfacePoint> pts;
      for (const auto &sp : rule) {
        InterfacePoint ip;
        ip.element = cut.element;
        ip.x = sp.x;
        ip.area = sp.area;
        ip.normal = n;
        ip.s = geometry_.arc_coordinate(sp.x);
        ip.weights = shape_functions_at(mesh_, cut.element, sp.x).N;
        pts.push_back(ip);
      }
      if (contact_.scheme == IntegrationScheme::averaged) {
        double total = 0.0;
        std::array<double, 4> avg{};
        for (const auto &ip : pts) {
          total += ip.area;
          for (int I = 0; I < 4; ++I)
            avg[I] += ip.area * ip.weights[I];
        }
        for (auto &w : avg)
          w /= total;
        for (auto &ip : pts)
          ip.weights = avg;
      }
      points_.insert(points_.end(), pts.begin(), pts.end());
    }
  }

  void build_constraints() {
    std::map<int, double> fixed;
    for (const auto &bc : bcs_.dirichlet) {
      if (bc.node < 0 || bc.node >= static_cast<int>(mesh_.num_nodes()) || bc.component < 0 ||
          bc.component > 1)
        throw InvalidConfig("Dirichlet condition on a nonexistent DOF");
      const int dof = dofs_.std_dof(bc.node, bc.component);
      auto [it, inserted] = fixed.emplace(dof, bc.value);
      if (!inserted && it->second != bc.value)
        throw InvalidConfig("conflicting Dirichlet values on one DOF");
    }
    for (const auto &pl : bcs_.point_loads) {
      if (pl.node < 0 || pl.node >= static_cast<int>(mesh_.num_nodes()) || pl.component < 0 ||
          pl.component > 1)
        throw InvalidConfig("point load on a nonexistent DOF");
      if (fixed.count(dofs_.std_dof(pl.node, pl.component)))
        throw InvalidConfig("DOF carries both a Dirichlet value and a point load");
    }
    constraints_.assign(fixed.begin(), fixed.end());
    reduced_index_.assign(num_dofs(), 0);
    for (const auto &[dof, v] : constraints_)
      reduced_index_[dof] = -1;
    for (int i = 0; i < num_dofs(); ++i)
      if (reduced_index_[i] == 0) {
        reduced_index_[i] = static_cast<int>(free_.size());
        free_.push_back(i);
      }
  }

  void build_bulk() {
    std::vector<Triplet> trip;
    trip.reserve(mesh_.num_elements() * 64 + cls_.num_cut() * 192);
    for (int e = 0; e < static_cast<int>(mesh_.num_elements()); ++e) {
      const auto idx = element_dofs(e);
      const int nd = static_cast<int>(idx.size());
      Eigen::MatrixXd Ke = Eigen::MatrixXd::Zero(nd, nd);
      Eigen::MatrixXd B(3, nd);
      for (const auto &qp : subcell_volume_quadrature(mesh_, e, cls_)) {
        const ShapeValues s = shape_functions_at(mesh_, e, qp.x);
        B.setZero();
        for (int I = 0; I < 4; ++I) {
          auto fill = [&](int col, const Vec2 &g) {
            B(0, col) = g.x();
            B(1, col + 1) = g.y();
            B(2, col) = g.y();
            B(2, col + 1) = g.x();
          };
          fill(2 * I, s.dN[I]);
          if (nd > 8) {
            const int n = mesh_.elements[e][I];
            const auto phi =
                enriched_shape(s.N[I], s.dN[I], heaviside(qp.side), cls_.nodal_heaviside[n]);
            fill(8 + 2 * I, phi.gradient);
          }
        }
        Ke.noalias() += qp.weight * B.transpose() * D(qp.side) * B;
      }
      for (int a = 0; a < nd; ++a)
        for (int b = 0; b < nd; ++b)
          trip.emplace_back(idx[a], idx[b], Ke(a, b));
    }
    K_bulk_.resize(num_dofs(), num_dofs());
    K_bulk_.setFromTriplets(trip.begin(), trip.end());
    K_bulk_.makeCompressed();
  }

  void build_external_load() {
    F_ext_ = Vector::Zero(num_dofs());
    static constexpr int edge_nodes[4][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    for (const auto &te : bcs_.tractions) {
      if (te.element < 0 || te.element >= static_cast<int>(mesh_.num_elements()) || te.edge < 0 ||
          te.edge > 3)
        throw InvalidConfig("traction on a nonexistent element edge");
      if (cls_.is_cut(te.element))
        throw InvalidConfig("traction edges on cut elements are not supported");
      // Linear shape functions on a straight edge: each end node receives half.
      const auto &conn = mesh_.elements[te.element];
      const double half = 0.5 * mesh_.h;
      for (int k : edge_nodes[te.edge])
        for (int c = 0; c < 2; ++c)
          F_ext_[dofs_.std_dof(conn[k], c)] += half * te.traction[c];
    }
    for (const auto &pl : bcs_.point_loads)
      F_ext_[dofs_.std_dof(pl.node, pl.component)] += pl.value;
  }

  Mesh mesh_;
  InterfaceGeometry geometry_;
  MaterialPair materials_;
  BoundaryConditions bcs_;
  ContactSettings contact_;
  Eigen::Matrix3d D_pos_;
  Eigen::Matrix3d D_neg_;
  CutClassification cls_;
  DofMap dofs_;
  std::vector<InterfacePoint> points_;
  std::vector<std::pair<int, double>> constraints_;
  std::vector<int> free_;
  std::vector<int> reduced_index_;
  SparseMatrix K_bulk_;
  Vector F_ext_;
};

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Global residual R = K_bulk X + f_interface(X) - load_scale F_ext and its
/// Jacobian. Every interface point contributes a full 8x8 enriched block (zeros
/// included) so the sparsity pattern does not depend on the contact state.
inline SparseSystem assemble(const Model &model, std::span<const double> X, double load_scale,
                             std::span<const PenaltyHistory> history = {}) {
  const auto &mesh = model.mesh();
  const auto &dofs = model.dofs();
  const auto &pts = model.interface_points();
  Eigen::Map<const Vector> x(X.data(), static_cast<Eigen::Index>(X.size()));

  SparseSystem sys;
  sys.R = model.bulk_stiffness() * x - load_scale * model.external_load();
  sys.states.resize(pts.size());

  std::vector<Triplet> trip;
  trip.reserve(pts.size() * 64);
  static const PenaltyHistory fresh{};
  for (std::size_t q = 0; q < pts.size(); ++q) {
    const auto &p = pts[q];
    const auto &hist = history.empty() ? fresh : history[q];
    const TractionState st = model.traction_at(q, X, hist);
    sys.states[q] = st;
    int idx[8];
    for (int I = 0; I < 4; ++I) {
      const int n = mesh.elements[p.element][I];
      idx[2 * I] = dofs.enr_dof(n, 0);
      idx[2 * I + 1] = dofs.enr_dof(n, 1);
    }
    for (int I = 0; I < 4; ++I) {
      const double wI = p.area * p.weights[I];
      sys.R[idx[2 * I]] += wI * st.t.x();
      sys.R[idx[2 * I + 1]] += wI * st.t.y();
      for (int K = 0; K < 4; ++K) {
        const Mat2 blk = wI * p.weights[K] * st.C;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            trip.emplace_back(idx[2 * I + a], idx[2 * K + b], blk(a, b));
      }
    }
  }
  SparseMatrix K_if(model.num_dofs(), model.num_dofs());
  K_if.setFromTriplets(trip.begin(), trip.end());
  sys.J = model.bulk_stiffness() + K_if;
  return sys;
}

/// Sets the constrained entries of X to their prescribed values at the given
/// load factor.
inline void impose_dirichlet(const Model &model, std::span<double> X, double load_scale) {
  for (const auto &[dof, value] : model.constraints())
    X[dof] = load_scale * value;
}

/// Residual and Jacobian restricted to the free DOFs. Prescribed values enter
/// through X, so their effect on free rows is already in the residual.
struct ReducedSystem {
  SparseMatrix J;
  Vector R;
};

inline ReducedSystem apply_dirichlet(const Model &model, const SparseSystem &sys) {
  const auto &map = model.reduced_index();
  const auto &free = model.free_dofs();
  const int nf = static_cast<int>(free.size());
  ReducedSystem red;
  red.R.resize(nf);
  for (int i = 0; i < nf; ++i)
    red.R[i] = sys.R[free[i]];
  std::vector<Triplet> trip;
  trip.reserve(sys.J.nonZeros());
  for (int k = 0; k < sys.J.outerSize(); ++k) {
    const int c = map[k];
    if (c < 0)
      continue;
    for (SparseMatrix::InnerIterator it(sys.J, k); it; ++it) {
      const int r = map[it.row()];
      if (r >= 0)
        trip.emplace_back(r, c, it.value());
    }
  }
  red.J.resize(nf, nf);
  red.J.setFromTriplets(trip.begin(), trip.end());
  red.J.makeCompressed();
  return red;
}

} // namespace xbarrier
