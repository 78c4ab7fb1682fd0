#pragma once

#include "xbarrier/solver.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace xbarrier::bench {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Everything needed to set up one benchmark run. Geometry that the source
/// problems only define pictorially is reconstructed here; see
/// configs/README.md for the reasoning behind each default.
struct ProblemConfig {
  std::string problem = "horizontal_crack";
  int nx = 25;
  int ny = 25;
  ContactMethod method = ContactMethod::barrier;
  IntegrationScheme scheme = IntegrationScheme::standard;
  int steps = 1;

  // materials: E of the positive side, E of the negative side
  double E_pos = 10e9;
  double E_neg = 10e9;
  double nu = 0.3;

  // contact
  double mu = 0.3;
  double p_opt = 0.55e9;
  std::optional<double> d_hat;   ///< default 1e-4 of the domain size
  std::optional<double> s_hat;   ///< default d_hat
  double alpha_N = 0.0;          ///< penalty only; 0 selects the default
  double alpha_T = 0.0;          ///< penalty / hybrid; 0 selects the default

  // loading
  double top_shear = 0.0;        ///< horizontal_crack: top u_x (m)
  double top_comp_left = 0.0;    ///< horizontal_crack: top settlement at x = 0 (m)
  double top_comp_right = 0.0;   ///< horizontal_crack: top settlement at x = Lx (m)
  double top_comp = 0.0;         ///< inclined_crack: top settlement (m)
  double pressure = 0.0;         ///< two_blocks: top pressure (Pa)
  double side_traction = 0.0;    ///< two_blocks: push on the upper block's left side (Pa)
  double contrast = 10.0;        ///< two_blocks: E_hard / E_soft
  double traction_v = 0.0;       ///< inclusion: vertical compression (Pa)
  double traction_h = 0.0;       ///< inclusion: horizontal tension (Pa)
  double radius = 0.0;           ///< inclusion radius (m)
  double inclusion_factor = 1.0; ///< inclusion: E_inclusion / E_matrix

  NewtonOptions newton;
  bool continue_on_failure = false;
  std::string out_dir;
};

inline const std::vector<std::string> &problem_ids() {
  static const std::vector<std::string> ids = {"horizontal_crack", "inclined_crack",
                                               "two_blocks", "inclusion"};
  return ids;
}

/// Registry defaults for each benchmark.
inline ProblemConfig default_config(const std::string &id) {
  ProblemConfig c;
  c.problem = id;
  if (id == "horizontal_crack") {
    c.nx = c.ny = 25;
    c.E_pos = c.E_neg = 10e9;
    c.nu = 0.3;
    c.mu = 0.3;
    c.p_opt = 0.55e9;
    c.top_shear = 0.1;
    c.top_comp_left = 0.025;
    c.top_comp_right = 0.075;
    c.steps = 1;
  } else if (id == "inclined_crack") {
    c.nx = c.ny = 160;
    c.E_pos = c.E_neg = 1e9;
    c.nu = 0.3;
    c.mu = 0.19;
    c.p_opt = 10e6;
    c.top_comp = 0.1;
    c.steps = 10;
  } else if (id == "two_blocks") {
    c.nx = 40;
    c.ny = 41;
    c.E_pos = 1000e3;
    c.contrast = 10.0;
    c.nu = 0.3;
    c.mu = 0.5;
    c.p_opt = 200e3;
    c.pressure = 200e3;
    c.side_traction = 150e3;
    c.steps = 1;
  } else if (id == "inclusion") {
    c.nx = c.ny = 100;
    c.E_pos = 1000e3;
    c.inclusion_factor = 1.0;
    c.nu = 0.0;
    c.mu = 0.0;
    c.p_opt = 10e3;
    c.traction_v = 10e3;
    c.traction_h = 10e3;
    c.radius = 0.985;
    c.scheme = IntegrationScheme::averaged;
    c.steps = 1;
  } else {
    throw InvalidConfig("unknown problem id '" + id + "'");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Problem construction
// ---------------------------------------------------------------------------

struct Setup {
  Mesh mesh;
  InterfaceGeometry geometry;
  MaterialPair materials;
  BoundaryConditions bcs;
  double domain_size = 1.0;
};

namespace detail {

inline void fix_node(BoundaryConditions &b, int node, int comp, double value = 0.0) {
  b.dirichlet.push_back({node, comp, value});
}

inline void add_edge_tractions(BoundaryConditions &b, const Mesh &m, int edge,
                               const Vec2 &traction, int first, int last) {
  // edge: 0 bottom row, 1 right column, 2 top row, 3 left column; [first, last)
  // indexes elements along that side.
  for (int k = first; k < last; ++k) {
    int e = 0;
    switch (edge) {
    case 0:
      e = m.element_id(k, 0);
      break;
    case 1:
      e = m.element_id(m.nx - 1, k);
      break;
    case 2:
      e = m.element_id(k, m.ny - 1);
      break;
    default:
      e = m.element_id(0, k);
      break;
    }
    b.tractions.push_back({e, edge, traction});
  }
}

inline void require_square_grid(const ProblemConfig &c, double Lx, double Ly) {
  if (std::abs(Lx / c.nx - Ly / c.ny) > 1e-12 * (Lx / c.nx))
    throw InvalidConfig("mesh " + std::to_string(c.nx) + "x" + std::to_string(c.ny) +
                        " does not give square elements for problem " + c.problem);
}

/// Rejects interfaces passing (nearly) through grid nodes; those produce
/// sliver cuts and near-singular enrichment.
inline void require_clear_of_nodes(const Mesh &m, const InterfaceGeometry &g) {
  for (const auto &x : m.nodes)
    if (std::abs(g.level_set(x)) < 1e-3 * m.h)
      throw InvalidConfig("interface passes within 1e-3 h of a grid node; adjust the mesh");
}

} // namespace detail

inline Setup build_setup(const ProblemConfig &c) {
  if (c.nx < 1 || c.ny < 1)
    throw InvalidConfig("mesh counts must be positive");
  const Material pos{c.E_pos, c.nu};
  const Material neg{c.E_neg, c.nu};
  if (c.problem == "horizontal_crack") {
    detail::require_square_grid(c, 1.0, 1.0);
    Setup s{build_structured_grid(c.nx, c.ny, 1.0, 1.0),
            InterfaceGeometry::line({0.0, 0.5}, {1.0, 0.0}), {pos, neg}, {}, 1.0};
    const auto &m = s.mesh;
    for (int i = 0; i <= m.nx; ++i) {
      detail::fix_node(s.bcs, m.node_id(i, 0), 0);
      detail::fix_node(s.bcs, m.node_id(i, 0), 1);
      const double x = m.nodes[m.node_id(i, m.ny)].x();
      detail::fix_node(s.bcs, m.node_id(i, m.ny), 0, c.top_shear);
      detail::fix_node(s.bcs, m.node_id(i, m.ny), 1,
                       -(c.top_comp_left + (c.top_comp_right - c.top_comp_left) * x));
    }
    detail::require_clear_of_nodes(s.mesh, s.geometry);
    return s;
  }
  if (c.problem == "inclined_crack") {
    detail::require_square_grid(c, 1.0, 1.0);
    const double h = 1.0 / c.nx;
    // Through the domain centre, shifted half an element up so that it stays
    // clear of grid nodes.
    Setup s{build_structured_grid(c.nx, c.ny, 1.0, 1.0),
            InterfaceGeometry::line_at_angle({0.5, 0.5 + 0.5 * h}, std::atan(0.2)),
            {pos, neg}, {}, 1.0};
    const auto &m = s.mesh;
    for (int i = 0; i <= m.nx; ++i) {
      detail::fix_node(s.bcs, m.node_id(i, 0), 0);
      detail::fix_node(s.bcs, m.node_id(i, 0), 1);
      detail::fix_node(s.bcs, m.node_id(i, m.ny), 0);
      detail::fix_node(s.bcs, m.node_id(i, m.ny), 1, -c.top_comp);
    }
    detail::require_clear_of_nodes(s.mesh, s.geometry);
    return s;
  }
  if (c.problem == "two_blocks") {
    const double h = 4.0 / c.nx;
    const double Ly = h * c.ny;
    if (c.ny % 2 == 0)
      throw InvalidConfig("two_blocks needs an odd number of element rows");
    // Soft block on top (positive side), hard block below.
    const Material soft{c.E_pos, c.nu};
    const Material hard{c.E_pos * c.contrast, c.nu};
    Setup s{build_structured_grid(c.nx, c.ny, 4.0, Ly),
            InterfaceGeometry::line({0.0, 0.5 * Ly}, {1.0, 0.0}), {soft, hard}, {}, 4.0};
    const auto &m = s.mesh;
    for (int i = 0; i <= m.nx; ++i) {
      detail::fix_node(s.bcs, m.node_id(i, 0), 0);
      detail::fix_node(s.bcs, m.node_id(i, 0), 1);
    }
    detail::add_edge_tractions(s.bcs, m, 2, {0.0, -c.pressure}, 0, m.nx);
    // lateral push on the upper block, rows strictly above the cut row
    detail::add_edge_tractions(s.bcs, m, 3, {c.side_traction, 0.0}, c.ny / 2 + 1, m.ny);
    detail::require_clear_of_nodes(s.mesh, s.geometry);
    return s;
  }
  if (c.problem == "inclusion") {
    const double L = 10.0;
    detail::require_square_grid(c, L, L);
    if (c.nx % 2 != 0 || c.ny % 2 != 0)
      throw InvalidConfig("inclusion needs even element counts (centre node)");
    if (!(c.radius > 0.0) || c.radius > 0.4 * L)
      throw InvalidConfig("inclusion radius out of range");
    const Material matrix{c.E_pos, c.nu};
    const Material incl{c.E_pos * c.inclusion_factor, c.nu};
    Setup s{build_structured_grid(c.nx, c.ny, L, L, Vec2(-0.5 * L, -0.5 * L)),
            InterfaceGeometry::circle(Vec2::Zero(), c.radius), {matrix, incl}, {}, L};
    const auto &m = s.mesh;
    detail::add_edge_tractions(s.bcs, m, 2, {0.0, -c.traction_v}, 0, m.nx);
    detail::add_edge_tractions(s.bcs, m, 0, {0.0, c.traction_v}, 0, m.nx);
    detail::add_edge_tractions(s.bcs, m, 1, {c.traction_h, 0.0}, 0, m.ny);
    detail::add_edge_tractions(s.bcs, m, 3, {-c.traction_h, 0.0}, 0, m.ny);
    const int ic = m.nx / 2;
    const int jc = m.ny / 2;
    // matrix: symmetric point supports against rigid motion
    detail::fix_node(s.bcs, m.node_id(ic, 0), 0);
    detail::fix_node(s.bcs, m.node_id(ic, m.ny), 0);
    detail::fix_node(s.bcs, m.node_id(0, jc), 1);
    detail::fix_node(s.bcs, m.node_id(m.nx, jc), 1);
    // inclusion: horizontal rollers at the centre and its adjacent nodes
    detail::fix_node(s.bcs, m.node_id(ic, jc), 0);
    detail::fix_node(s.bcs, m.node_id(ic, jc - 1), 0);
    detail::fix_node(s.bcs, m.node_id(ic, jc + 1), 0);
    detail::fix_node(s.bcs, m.node_id(ic - 1, jc), 0);
    detail::fix_node(s.bcs, m.node_id(ic + 1, jc), 0);
    detail::require_clear_of_nodes(s.mesh, s.geometry);
    return s;
  }
  throw InvalidConfig("unknown problem id '" + c.problem + "'");
}

inline ContactSettings contact_settings(const ProblemConfig &c, const Setup &s) {
  ContactSettings cs;
  cs.method = c.method;
  cs.scheme = c.scheme;
  cs.barrier = parameterize(s.domain_size, c.p_opt, c.d_hat, c.mu);
  if (c.s_hat) {
    if (!(*c.s_hat > 0.0))
      throw InvalidConfig("s_hat must be positive");
    cs.barrier.s_hat = *c.s_hat;
  }
  const double E_max = std::max(s.materials.positive.E, s.materials.negative.E);
  cs.penalty.mu = c.mu;
  cs.penalty.alpha_N = c.alpha_N > 0.0 ? c.alpha_N : optimal_initial_stiffness(E_max, s.mesh.h);
  cs.penalty.alpha_T = c.alpha_T > 0.0 ? c.alpha_T : cs.penalty.alpha_N;
  return cs;
}

inline Model build_model(const ProblemConfig &c) {
  Setup s = build_setup(c);
  const ContactSettings cs = contact_settings(c, s);
  return Model(std::move(s.mesh), s.geometry, s.materials, std::move(s.bcs), cs);
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

struct ProfileSample {
  double s = 0.0;    ///< arc length (m) or angle (deg)
  double u_N = 0.0;
  double u_T = 0.0;
  double p_N = 0.0;
  double tau = 0.0;
  double area = 0.0; ///< surface weight of the sample
  bool contact = false;
};

struct InterfaceProfile {
  std::vector<ProfileSample> samples; ///< sorted by s
  bool periodic = false;      ///< closed interface, s in degrees over [0, 360)
  double gap_threshold = 0.0; ///< u_N below which the interface carries pressure
};

inline InterfaceProfile extract_profile(const Model &model,
                                        const std::vector<TractionState> &states) {
  InterfaceProfile prof;
  const auto &pts = model.interface_points();
  prof.samples.reserve(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) {
    const auto &st = states[q];
    prof.samples.push_back(
        {pts[q].s, st.u_N, st.u_T, st.p_N, st.tau(), pts[q].area, st.p_N > 0.0});
  }
  std::stable_sort(prof.samples.begin(), prof.samples.end(),
                   [](const ProfileSample &a, const ProfileSample &b) { return a.s < b.s; });
  prof.periodic = model.geometry().is_circle();
  prof.gap_threshold = model.contact().barrier_normal() ? model.contact().barrier.d_hat : 0.0;
  return prof;
}

enum class Field { u_N, u_T, p_N, tau };

inline double field_of(const ProfileSample &p, Field f) {
  switch (f) {
  case Field::u_N:
    return p.u_N;
  case Field::u_T:
    return p.u_T;
  case Field::p_N:
    return p.p_N;
  case Field::tau:
    return p.tau;
  }
  return 0.0;
}

inline const char *field_name(Field f) {
  switch (f) {
  case Field::u_N:
    return "uN";
  case Field::u_T:
    return "uT";
  case Field::p_N:
    return "pN";
  case Field::tau:
    return "tau";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Spurious variation of a sampled profile: total variation minus that of
/// its best piecewise-monotone fit, normalized by max|v|. Each interior
/// turning point contributes the smaller of its two adjacent increments, so
/// monotone data and smooth extrema give (nearly) zero while a zigzag
/// contributes its full amplitude. Zero for fewer than three values.
inline double oscillation_metric(const std::vector<double> &v) {
  if (v.size() < 3)
    return 0.0;
  // plateaus (repeated values) do not separate a turning point's increments
  std::vector<double> inc;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] != v[i - 1])
      inc.push_back(v[i] - v[i - 1]);
  double excess = 0.0;
  for (std::size_t i = 1; i < inc.size(); ++i)
    if (inc[i - 1] * inc[i] < 0.0)
      excess += std::min(std::abs(inc[i - 1]), std::abs(inc[i]));
  double scale = 0.0;
  for (double x : v)
    scale = std::max(scale, std::abs(x));
  return scale > 0.0 ? excess / scale : 0.0;
}

/// Oscillation of one field over the contacting samples of a profile.
inline double oscillation_metric(const InterfaceProfile &prof, Field f) {
  std::vector<double> v;
  for (const auto &s : prof.samples)
    if (s.contact)
      v.push_back(field_of(s, f));
  return oscillation_metric(v);
}

/// Piecewise-linear interpolation of a field at coordinate s (clamped).
inline double interpolate(const InterfaceProfile &prof, Field f, double s) {
  const auto &v = prof.samples;
  if (v.empty())
    return 0.0;
  if (s <= v.front().s)
    return field_of(v.front(), f);
  if (s >= v.back().s)
    return field_of(v.back(), f);
  auto it = std::lower_bound(v.begin(), v.end(), s,
                             [](const ProfileSample &p, double x) { return p.s < x; });
  const auto &b = *it;
  const auto &a = *(it - 1);
  if (b.s == a.s)
    return field_of(b, f);
  const double t = (s - a.s) / (b.s - a.s);
  return (1.0 - t) * field_of(a, f) + t * field_of(b, f);
}

/// L2 distance between two profiles, resampled on a common uniform grid
/// spanning the overlap of their coordinate ranges.
inline double profile_l2_difference(const InterfaceProfile &a, const InterfaceProfile &b, Field f,
                                    int samples = 400) {
  if (a.samples.empty() || b.samples.empty())
    return 0.0;
  const double lo = std::max(a.samples.front().s, b.samples.front().s);
  const double hi = std::min(a.samples.back().s, b.samples.back().s);
  if (!(hi > lo))
    return 0.0;
  const double ds = (hi - lo) / samples;
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double s = lo + (i + 0.5) * ds;
    const double d = interpolate(a, f, s) - interpolate(b, f, s);
    sum += d * d * ds;
  }
  return std::sqrt(sum);
}

inline double profile_l2_norm(const InterfaceProfile &a, Field f, int samples = 400) {
  InterfaceProfile zero;
  zero.samples = a.samples;
  for (auto &s : zero.samples)
    s.u_N = s.u_T = s.p_N = s.tau = 0.0;
  return profile_l2_difference(a, zero, f, samples);
}

/// Fraction of a closed interface in contact, with u_N taken piecewise
/// linear in s between samples (wrapping at 360 degrees) so the contact
/// boundary is located between integration points.
inline double contact_fraction(const InterfaceProfile &prof) {
  const auto &v = prof.samples;
  if (v.empty())
    return 0.0;
  if (!prof.periodic)
    throw InvalidConfig("contact_fraction needs a closed interface profile");
  const double g = prof.gap_threshold;
  double closed = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto &a = v[i];
    const auto &b = v[(i + 1) % v.size()];
    const double ds = i + 1 < v.size() ? b.s - a.s : b.s + 360.0 - a.s;
    const double fa = a.u_N - g;
    const double fb = b.u_N - g;
    if (fa < 0.0 && fb < 0.0)
      closed += ds;
    else if ((fa < 0.0) != (fb < 0.0))
      closed += ds * (fa < 0.0 ? fa : fb) / (fa - fb) * (fa < 0.0 ? 1.0 : -1.0);
  }
  return closed / 360.0;
}

/// Length of the interface in contact: the summed weights of contacting
/// samples on open curves, the interpolated fraction of the perimeter on
/// closed ones.
inline double contact_length(const InterfaceProfile &prof) {
  double total = 0.0;
  double l = 0.0;
  for (const auto &s : prof.samples) {
    total += s.area;
    if (s.contact)
      l += s.area;
  }
  return prof.periodic ? contact_fraction(prof) * total : l;
}

/// Closed profiles: the separated fraction of the interface expressed as the
/// angle, measured from the horizontal axis, below which the interface is
/// open in each quadrant.
inline double separation_angle(const InterfaceProfile &prof) {
  return prof.samples.empty() ? 0.0 : 90.0 * (1.0 - contact_fraction(prof));
}

/// Circle profiles: mean oscillation of p_N over the four quadrants.
inline double quadrant_oscillation(const InterfaceProfile &prof, Field f) {
  double sum = 0.0;
  for (int q = 0; q < 4; ++q) {
    InterfaceProfile part;
    for (const auto &s : prof.samples)
      if (s.s >= 90.0 * q && s.s < 90.0 * (q + 1))
        part.samples.push_back(s);
    sum += oscillation_metric(part, f);
  }
  return 0.25 * sum;
}

/// Convergence order estimated from the last three residual norms that lie
/// above ten times the round-off floor.
inline double tail_order(const std::vector<double> &norms, double floor = 0.0) {
  std::vector<double> r;
  for (double x : norms)
    if (x > 10.0 * floor)
      r.push_back(x);
  if (r.size() < 3)
    return 0.0;
  const double a = r[r.size() - 3];
  const double b = r[r.size() - 2];
  const double c = r[r.size() - 1];
  if (!(a > 0.0 && b > 0.0 && c > 0.0) || a == b)
    return 0.0;
  return std::log(c / b) / std::log(b / a);
}

inline double tail_order(const StepReport &s) { return tail_order(s.residual_norms, s.residual_floor); }

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_profile_csv(const std::filesystem::path &path, const InterfaceProfile &prof) {
  std::ofstream os(path);
  if (!os)
    throw IoError("cannot open " + path.string());
  os << "s,uN,uT,pN,tau,status\n";
  for (const auto &s : prof.samples)
    os << format_double(s.s) << ',' << format_double(s.u_N) << ',' << format_double(s.u_T) << ','
       << format_double(s.p_N) << ',' << format_double(s.tau) << ','
       << (s.contact ? "contact" : "open") << '\n';
  if (!os)
    throw IoError("write failed for " + path.string());
}

inline void write_convergence_csv(const std::filesystem::path &path, const NewtonReport &rep) {
  std::ofstream os(path);
  if (!os)
    throw IoError("cannot open " + path.string());
  os << "step,iter,residual_norm\n";
  for (const auto &s : rep.steps)
    for (std::size_t k = 0; k < s.residual_norms.size(); ++k)
      os << s.step << ',' << k << ',' << format_double(s.residual_norms[k]) << '\n';
  if (!os)
    throw IoError("write failed for " + path.string());
}

using Summary = std::vector<std::pair<std::string, std::string>>;

inline void write_summary(const std::filesystem::path &path, const Summary &sum) {
  std::ofstream os(path);
  if (!os)
    throw IoError("cannot open " + path.string());
  for (const auto &[k, v] : sum)
    os << k << " = " << v << '\n';
  if (!os)
    throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct BenchmarkResult {
  std::vector<InterfaceProfile> profiles; ///< per completed step
  NewtonReport report;
  Vector solution;                        ///< last step
  Summary summary;
  bool converged = false;

  const InterfaceProfile &final_profile() const { return profiles.back(); }
};

inline const char *to_string(ContactMethod m) {
  switch (m) {
  case ContactMethod::barrier:
    return "barrier";
  case ContactMethod::penalty:
    return "penalty";
  case ContactMethod::hybrid:
    return "hybrid";
  }
  return "?";
}

inline const char *to_string(IntegrationScheme s) {
  return s == IntegrationScheme::averaged ? "averaged" : "standard";
}

inline Summary summarize(const ProblemConfig &c, const Model &model, const BenchmarkResult &r) {
  Summary s;
  auto add = [&](const std::string &k, const std::string &v) { s.emplace_back(k, v); };
  auto addd = [&](const std::string &k, double v) { add(k, format_double(v)); };
  add("problem", c.problem);
  add("mesh", std::to_string(c.nx) + "x" + std::to_string(c.ny));
  add("method", to_string(c.method));
  add("integration", to_string(c.scheme));
  add("steps", std::to_string(c.steps));
  const auto &b = model.contact().barrier;
  addd("d_hat", b.d_hat);
  addd("s_hat", b.s_hat);
  addd("d0", b.d0);
  addd("kappa", b.kappa);
  addd("p_opt", b.p_opt);
  addd("mu", b.mu);
  add("n_dofs", std::to_string(model.num_dofs()));
  add("n_interface_points", std::to_string(model.interface_points().size()));
  add("converged", r.converged ? "true" : "false");
  add("steps_completed", std::to_string(r.report.steps.size()));
  add("total_iterations", std::to_string(r.report.total_iterations()));
  std::string iters;
  for (const auto &st : r.report.steps)
    iters += (iters.empty() ? "" : ";") + std::to_string(st.iterations);
  add("iterations_per_step", iters);
  std::string reasons;
  for (const auto &st : r.report.steps)
    reasons += (reasons.empty() ? "" : ";") + std::string(to_string(st.reason));
  add("stop_reason_per_step", reasons);
  addd("wall_time_s", r.report.wall_time);
  if (!r.profiles.empty()) {
    const auto &p = r.final_profile();
    double max_uN = 0, min_uN = std::numeric_limits<double>::infinity(), max_uT = 0, max_pN = 0,
           max_tau = 0;
    for (const auto &x : p.samples) {
      max_uN = std::max(max_uN, x.u_N);
      min_uN = std::min(min_uN, x.u_N);
      max_uT = std::max(max_uT, x.u_T);
      max_pN = std::max(max_pN, x.p_N);
      max_tau = std::max(max_tau, x.tau);
    }
    addd("max_uN", max_uN);
    addd("min_uN", min_uN);
    addd("max_uT", max_uT);
    addd("max_pN", max_pN);
    addd("max_tau", max_tau);
    addd("contact_length", contact_length(p));
    if (model.geometry().is_circle()) {
      addd("separation_angle_deg", separation_angle(p));
      addd("oscillation_pN", quadrant_oscillation(p, Field::p_N));
    } else {
      addd("oscillation_pN", oscillation_metric(p, Field::p_N));
      addd("oscillation_tau", oscillation_metric(p, Field::tau));
    }
  }
  if (!r.report.steps.empty())
    addd("tail_order_last_step", tail_order(r.report.steps.back()));
  return s;
}

inline BenchmarkResult run_benchmark(const ProblemConfig &c) {
  const Model model = build_model(c);
  BenchmarkResult r;
  LoadPath path = run_load_steps(model, c.steps, c.newton, c.continue_on_failure);
  r.report = path.report;
  r.converged = path.report.converged;
  for (const auto &st : path.states)
    r.profiles.push_back(extract_profile(model, st));
  if (!path.solutions.empty())
    r.solution = path.solutions.back();
  r.summary = summarize(c, model, r);

  if (!c.out_dir.empty()) {
    const std::filesystem::path dir(c.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
      throw IoError("cannot create output directory " + dir.string());
    for (std::size_t k = 0; k < r.profiles.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "profile_step%03zu.csv", k + 1);
      write_profile_csv(dir / name, r.profiles[k]);
    }
    if (!r.profiles.empty())
      write_profile_csv(dir / "profile.csv", r.profiles.back());
    write_convergence_csv(dir / "convergence.csv", r.report);
    write_summary(dir / "summary.txt", r.summary);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

struct MeshStudyRow {
  std::string from;
  std::string to;
  double diff_uN = 0.0;
  double diff_uT = 0.0;
  double diff_pN = 0.0;
  double diff_tau = 0.0;
};

struct MeshStudy {
  std::vector<BenchmarkResult> runs;
  std::vector<MeshStudyRow> rows;

  double diff(std::size_t i, Field f) const {
    switch (f) {
    case Field::u_N:
      return rows[i].diff_uN;
    case Field::u_T:
      return rows[i].diff_uT;
    case Field::p_N:
      return rows[i].diff_pN;
    case Field::tau:
      return rows[i].diff_tau;
    }
    return 0.0;
  }
  bool monotone(Field f) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(diff(i, f) < diff(i - 1, f)))
        return false;
    return true;
  }
};

/// Runs the configuration on each mesh and reports the L2 differences of the
/// final profiles between successive meshes.
inline MeshStudy convergence_study(const ProblemConfig &base,
                                   const std::vector<std::pair<int, int>> &meshes) {
  if (meshes.size() < 2)
    throw InvalidConfig("mesh study needs at least two meshes");
  MeshStudy st;
  for (const auto &[nx, ny] : meshes) {
    ProblemConfig c = base;
    c.nx = nx;
    c.ny = ny;
    if (!base.out_dir.empty())
      c.out_dir = base.out_dir + "/mesh_" + std::to_string(nx) + "x" + std::to_string(ny);
    st.runs.push_back(run_benchmark(c));
    if (!st.runs.back().converged)
      throw Error("mesh study aborted: run on " + std::to_string(nx) + "x" + std::to_string(ny) +
                  " did not converge");
  }
  for (std::size_t i = 1; i < st.runs.size(); ++i) {
    const auto &a = st.runs[i - 1].final_profile();
    const auto &b = st.runs[i].final_profile();
    MeshStudyRow row;
    row.from = std::to_string(meshes[i - 1].first) + "x" + std::to_string(meshes[i - 1].second);
    row.to = std::to_string(meshes[i].first) + "x" + std::to_string(meshes[i].second);
    row.diff_uN = profile_l2_difference(a, b, Field::u_N);
    row.diff_uT = profile_l2_difference(a, b, Field::u_T);
    row.diff_pN = profile_l2_difference(a, b, Field::p_N);
    row.diff_tau = profile_l2_difference(a, b, Field::tau);
    st.rows.push_back(row);
  }
  return st;
}

struct SensitivityResult {
  std::vector<BenchmarkResult> runs; ///< reference first
  std::vector<double> values;        ///< parameter value per run
  std::vector<double> max_rel_displacement_diff; ///< vs reference, per run
  std::vector<double> max_rel_traction_diff;     ///< vs reference, per run
};

namespace detail {

inline double max_rel_diff(const Vector &a, const Vector &b, int n) {
  const double scale = a.head(n).cwiseAbs().maxCoeff();
  return scale > 0.0 ? (a.head(n) - b.head(n)).cwiseAbs().maxCoeff() / scale : 0.0;
}

inline double max_rel_traction_diff(const InterfaceProfile &a, const InterfaceProfile &b) {
  double scale = 0.0;
  double diff = 0.0;
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    scale = std::max({scale, a.samples[i].p_N, a.samples[i].tau});
    diff = std::max({diff, std::abs(a.samples[i].p_N - b.samples[i].p_N),
                     std::abs(a.samples[i].tau - b.samples[i].tau)});
  }
  return scale > 0.0 ? diff / scale : 0.0;
}

inline SensitivityResult compare_runs(const std::vector<ProblemConfig> &cfgs,
                                      const std::vector<double> &values) {
  SensitivityResult r;
  r.values = values;
  for (const auto &c : cfgs)
    r.runs.push_back(run_benchmark(c));
  const auto &ref = r.runs.front();
  for (const auto &run : r.runs) {
    if (!run.converged || !ref.converged) {
      r.max_rel_displacement_diff.push_back(std::numeric_limits<double>::quiet_NaN());
      r.max_rel_traction_diff.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    // standard DOFs hold nodal displacements
    const int n_std = static_cast<int>(2 * build_setup(cfgs.front()).mesh.num_nodes());
    r.max_rel_displacement_diff.push_back(max_rel_diff(ref.solution, run.solution, n_std));
    r.max_rel_traction_diff.push_back(
        max_rel_traction_diff(ref.final_profile(), run.final_profile()));
  }
  return r;
}

} // namespace detail

/// Reruns a configuration with kappa built from scaled pressure estimates
/// (factor 1 is the reference).
inline SensitivityResult kappa_sensitivity_study(const ProblemConfig &base,
                                                 const std::vector<double> &factors = {1.0, 0.5}) {
  std::vector<ProblemConfig> cfgs;
  std::vector<double> values;
  for (double f : factors) {
    ProblemConfig c = base;
    c.p_opt = base.p_opt * f;
    if (!base.out_dir.empty())
      c.out_dir = base.out_dir + "/popt_" + format_double(c.p_opt);
    cfgs.push_back(c);
    values.push_back(c.p_opt);
  }
  return detail::compare_runs(cfgs, values);
}

/// Reruns a configuration with different barrier thicknesses (first is the
/// reference).
inline SensitivityResult dhat_study(const ProblemConfig &base, const std::vector<double> &d_hats) {
  std::vector<ProblemConfig> cfgs;
  for (double d : d_hats) {
    ProblemConfig c = base;
    c.d_hat = d;
    if (!base.out_dir.empty())
      c.out_dir = base.out_dir + "/dhat_" + format_double(d);
    cfgs.push_back(c);
  }
  return detail::compare_runs(cfgs, d_hats);
}

// ---------------------------------------------------------------------------
// Plain-text configuration
// ---------------------------------------------------------------------------

inline ContactMethod parse_method(const std::string &v) {
  if (v == "barrier")
    return ContactMethod::barrier;
  if (v == "penalty")
    return ContactMethod::penalty;
  if (v == "hybrid")
    return ContactMethod::hybrid;
  throw InvalidConfig("unknown contact method '" + v + "'");
}

inline IntegrationScheme parse_scheme(const std::string &v) {
  if (v == "standard")
    return IntegrationScheme::standard;
  if (v == "averaged")
    return IntegrationScheme::averaged;
  throw InvalidConfig("unknown integration scheme '" + v + "'");
}

inline std::pair<int, int> parse_mesh(const std::string &v) {
  const auto x = v.find('x');
  try {
    if (x == std::string::npos)
      throw std::invalid_argument(v);
    std::size_t p1 = 0;
    std::size_t p2 = 0;
    const int nx = std::stoi(v.substr(0, x), &p1);
    const int ny = std::stoi(v.substr(x + 1), &p2);
    if (p1 != x || p2 != v.size() - x - 1 || nx < 1 || ny < 1)
      throw std::invalid_argument(v);
    return {nx, ny};
  } catch (const std::exception &) {
    throw InvalidConfig("mesh must look like <nx>x<ny>, got '" + v + "'");
  }
}

/// Applies one key/value override.
inline void apply_setting(ProblemConfig &c, const std::string &key, const std::string &value) {
  auto num = [&]() {
    try {
      std::size_t pos = 0;
      const double d = std::stod(value, &pos);
      if (pos != value.size())
        throw std::invalid_argument(value);
      return d;
    } catch (const std::exception &) {
      throw InvalidConfig("key '" + key + "' expects a number, got '" + value + "'");
    }
  };
  auto integer = [&]() {
    const double d = num();
    if (d != std::floor(d))
      throw InvalidConfig("key '" + key + "' expects an integer");
    return static_cast<int>(d);
  };
  if (key == "problem")
    c.problem = value;
  else if (key == "mesh")
    std::tie(c.nx, c.ny) = parse_mesh(value);
  else if (key == "method")
    c.method = parse_method(value);
  else if (key == "integration")
    c.scheme = parse_scheme(value);
  else if (key == "steps")
    c.steps = integer();
  else if (key == "E_pos")
    c.E_pos = num();
  else if (key == "E_neg")
    c.E_neg = num();
  else if (key == "nu")
    c.nu = num();
  else if (key == "mu")
    c.mu = num();
  else if (key == "p_opt")
    c.p_opt = num();
  else if (key == "d_hat")
    c.d_hat = num();
  else if (key == "s_hat")
    c.s_hat = num();
  else if (key == "alpha_N")
    c.alpha_N = num();
  else if (key == "alpha_T")
    c.alpha_T = num();
  else if (key == "top_shear")
    c.top_shear = num();
  else if (key == "top_comp_left")
    c.top_comp_left = num();
  else if (key == "top_comp_right")
    c.top_comp_right = num();
  else if (key == "top_comp")
    c.top_comp = num();
  else if (key == "pressure")
    c.pressure = num();
  else if (key == "side_traction")
    c.side_traction = num();
  else if (key == "contrast")
    c.contrast = num();
  else if (key == "traction_v")
    c.traction_v = num();
  else if (key == "traction_h")
    c.traction_h = num();
  else if (key == "radius")
    c.radius = num();
  else if (key == "inclusion_factor")
    c.inclusion_factor = num();
  else if (key == "tol_rel")
    c.newton.tol_rel = num();
  else if (key == "tol_abs")
    c.newton.tol_abs = num();
  else if (key == "max_iterations")
    c.newton.max_iterations = integer();
  else if (key == "damping")
    c.newton.damping = (value == "true" || value == "1");
  else if (key == "continue_on_failure")
    c.continue_on_failure = (value == "true" || value == "1");
  else if (key == "out")
    c.out_dir = value;
  else
    throw InvalidConfig("unknown config key '" + key + "'");
}

inline std::map<std::string, std::string> parse_key_values(std::istream &in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig("config line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

/// Reads a key = value file on top of the registry defaults of its `problem`
/// (or of `fallback_problem` when the file does not name one).
inline ProblemConfig load_config(const std::filesystem::path &path,
                                 const std::string &fallback_problem = "horizontal_crack") {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot read config " + path.string());
  const auto kv = parse_key_values(in);
  const auto it = kv.find("problem");
  ProblemConfig c = default_config(it != kv.end() ? it->second : fallback_problem);
  for (const auto &[k, v] : kv)
    apply_setting(c, k, v);
  return c;
}

} // namespace xbarrier::bench
