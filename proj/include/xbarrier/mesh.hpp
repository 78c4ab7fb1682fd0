#pragma once

#include "xbarrier/common.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace xbarrier {

// ---------------------------------------------------------------------------
// Structured quadrilateral grid
// ---------------------------------------------------------------------------

/// Uniform grid of square bilinear elements. Nodes are numbered
/// lexicographically with x running fastest; element connectivity is
/// counter-clockwise starting at the lower-left corner.
struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 4>> elements;
  int nx = 0;
  int ny = 0;
  double Lx = 0.0;
  double Ly = 0.0;
  double h = 0.0;
  Vec2 origin = Vec2::Zero();

  int node_id(int i, int j) const { return j * (nx + 1) + i; }
  int element_id(int i, int j) const { return j * nx + i; }

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_elements() const { return elements.size(); }

  Vec2 lower_corner(int e) const { return nodes[elements[e][0]]; }

  /// Local coordinates in [-1,1]^2 of a physical point inside element e.
  Vec2 local_coords(int e, const Vec2 &x) const {
    return (2.0 / h) * (x - lower_corner(e)) - Vec2::Ones();
  }
  Vec2 global_coords(int e, const Vec2 &xi) const {
    return lower_corner(e) + 0.5 * h * (xi + Vec2::Ones());
  }
};

inline Mesh build_structured_grid(int nx, int ny, double Lx, double Ly,
                                  const Vec2 &origin = Vec2::Zero()) {
  if (nx < 1 || ny < 1)
    throw InvalidConfig("structured grid needs at least one element per direction");
  if (!(Lx > 0.0) || !(Ly > 0.0))
    throw InvalidConfig("structured grid extents must be positive");
  const double hx = Lx / nx;
  const double hy = Ly / ny;
  if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy))
    throw InvalidConfig("structured grid elements must be square (Lx/nx == Ly/ny)");

  Mesh m;
  m.nx = nx;
  m.ny = ny;
  m.Lx = Lx;
  m.Ly = Ly;
  m.h = hx;
  m.origin = origin;
  m.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.nodes.emplace_back(origin.x() + Lx * i / nx, origin.y() + Ly * j / ny);
  m.elements.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      m.elements.push_back({m.node_id(i, j), m.node_id(i + 1, j),
                            m.node_id(i + 1, j + 1), m.node_id(i, j + 1)});
  return m;
}

// ---------------------------------------------------------------------------
// Interface geometry
// ---------------------------------------------------------------------------

struct LineInterface {
  Vec2 point;
  Vec2 direction; ///< unit
};

struct CircleInterface {
  Vec2 center;
  double radius = 0.0;
};

/// A single straight or circular interface described by a signed distance
/// function. The positive side lies to the left of a line's direction and
/// outside a circle; the unit normal is the gradient of the distance, so it
/// always points into the positive side.
class InterfaceGeometry {
public:
  static InterfaceGeometry line(const Vec2 &point, const Vec2 &direction) {
    const double len = direction.norm();
    if (!(len > 0.0))
      throw InvalidConfig("interface line direction must be non-zero");
    return InterfaceGeometry(LineInterface{point, direction / len});
  }
  static InterfaceGeometry line_at_angle(const Vec2 &point, double angle_rad) {
    return line(point, Vec2(std::cos(angle_rad), std::sin(angle_rad)));
  }
  static InterfaceGeometry circle(const Vec2 &center, double radius) {
    if (!(radius > 0.0))
      throw InvalidConfig("interface circle radius must be positive");
    return InterfaceGeometry(CircleInterface{center, radius});
  }

  bool is_circle() const { return std::holds_alternative<CircleInterface>(shape_); }
  const LineInterface &as_line() const { return std::get<LineInterface>(shape_); }
  const CircleInterface &as_circle() const { return std::get<CircleInterface>(shape_); }

  double level_set(const Vec2 &x) const {
    if (const auto *l = std::get_if<LineInterface>(&shape_))
      return cross2(l->direction, x - l->point);
    const auto &c = std::get<CircleInterface>(shape_);
    return (x - c.center).norm() - c.radius;
  }

  Vec2 normal(const Vec2 &x) const {
    if (const auto *l = std::get_if<LineInterface>(&shape_))
      return {-l->direction.y(), l->direction.x()};
    const auto &c = std::get<CircleInterface>(shape_);
    const Vec2 r = x - c.center;
    const double len = r.norm();
    return len > 0.0 ? Vec2(r / len) : Vec2(1.0, 0.0);
  }

  /// Coordinate used to order profile samples: signed arc length along the
  /// line from its anchor point, or the polar angle in degrees in [0, 360).
  double arc_coordinate(const Vec2 &x) const {
    if (const auto *l = std::get_if<LineInterface>(&shape_))
      return l->direction.dot(x - l->point);
    const auto &c = std::get<CircleInterface>(shape_);
    double deg = std::atan2(x.y() - c.center.y(), x.x() - c.center.x()) * 180.0 /
                 std::numbers::pi;
    if (deg < 0.0)
      deg += 360.0;
    return deg;
  }

private:
  explicit InterfaceGeometry(std::variant<LineInterface, CircleInterface> s)
      : shape_(std::move(s)) {}
  std::variant<LineInterface, CircleInterface> shape_;
};

inline double level_set(const InterfaceGeometry &g, const Vec2 &x) {
  return g.level_set(x);
}

// ---------------------------------------------------------------------------
// Cut classification
// ---------------------------------------------------------------------------

enum class Side { negative = 0, positive = 1 };

inline int heaviside(Side s) { return s == Side::positive ? 1 : 0; }

enum class ElementState { uncut_negative, uncut_positive, cut };

/// Geometry of one element crossed by the interface.
struct CutElement {
  int element = -1;
  Vec2 a; ///< segment endpoints, ordered along the interface tangent
  Vec2 b;
  std::vector<Vec2> positive_polygon;
  std::vector<Vec2> negative_polygon;

  double length() const { return (b - a).norm(); }
};

struct CutClassification {
  std::vector<ElementState> state;   ///< per element
  std::vector<int> cut_index;        ///< per element: index into cuts or -1
  std::vector<CutElement> cuts;      ///< ordered by element index
  std::vector<double> nodal_phi;     ///< after snapping
  std::vector<int> nodal_heaviside;  ///< per node, 0 or 1

  std::size_t num_cut() const { return cuts.size(); }
  bool is_cut(int e) const { return cut_index[e] >= 0; }
};

/// Relative (to h) threshold under which a nodal level-set value is pushed to
/// the positive side.
inline constexpr double kSnapTolerance = 1e-8;

namespace detail {

/// Root of the level set on the straight edge p0 -> p1, given the (snapped)
/// end values of opposite sign. Illinois false position.
inline Vec2 edge_root(const InterfaceGeometry &g, const Vec2 &p0, const Vec2 &p1,
                      double f0, double f1, double tol) {
  double t0 = 0.0;
  double t1 = 1.0;
  int side = 0;
  double t = 0.5;
  for (int it = 0; it < 200; ++it) {
    t = (t0 * f1 - t1 * f0) / (f1 - f0);
    const double f = g.level_set(p0 + t * (p1 - p0));
    if (std::abs(f) <= tol)
      break;
    if ((f > 0.0) == (f1 > 0.0)) {
      t1 = t;
      f1 = f;
      if (side == -1)
        f0 *= 0.5;
      side = -1;
    } else {
      t0 = t;
      f0 = f;
      if (side == +1)
        f1 *= 0.5;
      side = +1;
    }
    if (t1 - t0 < 1e-15)
      break;
  }
  return p0 + t * (p1 - p0);
}

inline double polygon_area(const std::vector<Vec2> &poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    a += cross2(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

} // namespace detail

inline CutClassification classify_elements(const Mesh &mesh, const InterfaceGeometry &g) {
  CutClassification c;
  const double snap = kSnapTolerance * mesh.h;
  c.nodal_phi.resize(mesh.num_nodes());
  c.nodal_heaviside.resize(mesh.num_nodes());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    double phi = g.level_set(mesh.nodes[i]);
    if (std::abs(phi) < snap)
      phi = snap;
    c.nodal_phi[i] = phi;
    c.nodal_heaviside[i] = phi > 0.0 ? 1 : 0;
  }

  c.state.resize(mesh.num_elements());
  c.cut_index.assign(mesh.num_elements(), -1);
  const double root_tol = 1e-13 * mesh.h;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto &conn = mesh.elements[e];
    int npos = 0;
    for (int k = 0; k < 4; ++k)
      npos += c.nodal_heaviside[conn[k]];
    if (npos == 4) {
      c.state[e] = ElementState::uncut_positive;
      continue;
    }
    if (npos == 0) {
      c.state[e] = ElementState::uncut_negative;
      continue;
    }

    CutElement cut;
    cut.element = static_cast<int>(e);
    std::vector<Vec2> crossings;
    for (int k = 0; k < 4; ++k) {
      const int n0 = conn[k];
      const int n1 = conn[(k + 1) % 4];
      const Vec2 &p0 = mesh.nodes[n0];
      const Vec2 &p1 = mesh.nodes[n1];
      const double f0 = c.nodal_phi[n0];
      const double f1 = c.nodal_phi[n1];
      (f0 > 0.0 ? cut.positive_polygon : cut.negative_polygon).push_back(p0);
      if ((f0 > 0.0) != (f1 > 0.0)) {
        const Vec2 x = detail::edge_root(g, p0, p1, f0, f1, root_tol);
        crossings.push_back(x);
        cut.positive_polygon.push_back(x);
        cut.negative_polygon.push_back(x);
      }
    }
    if (crossings.size() != 2)
      throw UnsupportedTopology("element " + std::to_string(e) +
                                " is split into more than two pieces");
    cut.a = crossings[0];
    cut.b = crossings[1];
    const Vec2 mid = 0.5 * (cut.a + cut.b);
    if ((cut.b - cut.a).dot(tangent_of(g.normal(mid))) < 0.0)
      std::swap(cut.a, cut.b);
    c.state[e] = ElementState::cut;
    c.cut_index[e] = static_cast<int>(c.cuts.size());
    c.cuts.push_back(std::move(cut));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct VolumePoint {
  Vec2 x;
  double weight = 0.0;
  Side side = Side::positive;
};

/// Volume rule for element e: 2x2 Gauss when uncut; otherwise each side's
/// polygon is fan-triangulated from its vertex centroid and integrated with
/// the 3-point degree-2 triangle rule.
inline std::vector<VolumePoint> subcell_volume_quadrature(const Mesh &mesh, int e,
                                                          const CutClassification &c) {
  std::vector<VolumePoint> pts;
  if (!c.is_cut(e)) {
    const Side side =
        c.state[e] == ElementState::uncut_positive ? Side::positive : Side::negative;
    const double g = 1.0 / std::sqrt(3.0);
    const double w = 0.25 * mesh.h * mesh.h;
    for (double eta : {-g, g})
      for (double xi : {-g, g})
        pts.push_back({mesh.global_coords(e, Vec2(xi, eta)), w, side});
    return pts;
  }

  const CutElement &cut = c.cuts[c.cut_index[e]];
  const double min_area = 1e-14 * mesh.h * mesh.h;
  auto add_polygon = [&](const std::vector<Vec2> &poly, Side side) {
    Vec2 centroid = Vec2::Zero();
    for (const auto &p : poly)
      centroid += p;
    centroid /= static_cast<double>(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 &p1 = poly[i];
      const Vec2 &p2 = poly[(i + 1) % poly.size()];
      const double area = 0.5 * std::abs(cross2(p1 - centroid, p2 - centroid));
      if (area < min_area)
        continue;
      // barycentric (2/3, 1/6, 1/6) and permutations
      const Vec2 q[3] = {(4.0 * centroid + p1 + p2) / 6.0,
                         (centroid + 4.0 * p1 + p2) / 6.0,
                         (centroid + p1 + 4.0 * p2) / 6.0};
      for (const auto &x : q)
        pts.push_back({x, area / 3.0, side});
    }
  };
  add_polygon(cut.positive_polygon, Side::positive);
  add_polygon(cut.negative_polygon, Side::negative);
  return pts;
}

struct SurfacePoint {
  Vec2 x;
  double area = 0.0;
};

/// Two-point Gauss rule on a straight interface segment. Returns an empty rule
/// for a zero-length segment.
inline std::vector<SurfacePoint> interface_segment_quadrature(const Vec2 &a, const Vec2 &b) {
  const double len = (b - a).norm();
  if (!(len > 0.0))
    return {};
  const double g = 0.5 / std::sqrt(3.0);
  return {{a + (0.5 - g) * (b - a), 0.5 * len}, {a + (0.5 + g) * (b - a), 0.5 * len}};
}

} // namespace xbarrier
