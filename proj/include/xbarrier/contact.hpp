#pragma once

#include "xbarrier/common.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace xbarrier {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Barrier contact parameters. Built with `parameterize` they satisfy
/// d0 = 0.376 d_hat and p_N(d0) = p_opt.
struct BarrierParams {
  double d_hat = 0.0;  ///< barrier thickness (m)
  double s_hat = 0.0;  ///< maximum microslip (m)
  double d0 = 0.0;     ///< initial gap of a closed interface (m)
  double kappa = 0.0;  ///< barrier stiffness (Pa/m)
  double p_opt = 0.0;  ///< initial contact pressure estimate (Pa)
  double mu = 0.0;     ///< friction coefficient

  void validate() const {
    if (!(d_hat > 0.0) || !(d0 > 0.0) || !(d0 < d_hat))
      throw InvalidConfig("barrier parameters need 0 < d0 < d_hat");
    if (!(s_hat > 0.0) || !(kappa > 0.0) || !(mu >= 0.0))
      throw InvalidConfig("barrier parameters need s_hat > 0, kappa > 0, mu >= 0");
  }
};

struct PenaltyParams {
  double alpha_N = 0.0; ///< normal penalty (Pa/m)
  double alpha_T = 0.0; ///< tangential penalty (Pa/m)
  double mu = 0.0;
};

/// Ratio d0/d_hat that minimizes the conditioning measure g.
inline constexpr double kInitialGapRatio = 0.376;

// ---------------------------------------------------------------------------
// Barrier law
// ---------------------------------------------------------------------------

namespace detail {
inline void require_positive_gap(double u_N) {
  if (!(u_N > 0.0))
    throw PenetrationError("barrier evaluated at non-positive gap u_N = " +
                           std::to_string(u_N));
}
} // namespace detail

/// Barrier energy density -kappa (u_N - d_hat)^2 ln(u_N / d_hat), truncated
/// to zero beyond d_hat.
inline double barrier_energy(double u_N, const BarrierParams &p) {
  detail::require_positive_gap(u_N);
  if (u_N >= p.d_hat)
    return 0.0;
  const double d = u_N - p.d_hat;
  return -p.kappa * d * d * std::log(u_N / p.d_hat);
}

/// p_N = -dB/du_N.
inline double contact_pressure(double u_N, const BarrierParams &p) {
  detail::require_positive_gap(u_N);
  if (u_N >= p.d_hat)
    return 0.0;
  return p.kappa * (u_N - p.d_hat) * (2.0 * std::log(u_N / p.d_hat) - p.d_hat / u_N + 1.0);
}

/// k_N = -dp_N/du_N; non-negative on (0, d_hat].
inline double normal_stiffness(double u_N, const BarrierParams &p) {
  detail::require_positive_gap(u_N);
  if (u_N >= p.d_hat)
    return 0.0;
  return -2.0 * p.kappa * std::log(u_N / p.d_hat) -
         p.kappa * (u_N - p.d_hat) * (3.0 * u_N + p.d_hat) / (u_N * u_N);
}

struct SmoothingValue {
  double value = 0.0; ///< m(u_T) in [0, 1]
  double slope = 0.0; ///< dm/du_T
};

/// C1 friction mobilization -u_T^2/s^2 + 2 u_T/s, saturating at 1 for u_T >= s.
inline SmoothingValue friction_smoothing(double u_T, double s_hat) {
  const double u = std::abs(u_T);
  if (u >= s_hat)
    return {1.0, 0.0};
  return {-u * u / (s_hat * s_hat) + 2.0 * u / s_hat, 2.0 / s_hat - 2.0 * u / (s_hat * s_hat)};
}

// ---------------------------------------------------------------------------
// Traction update
// ---------------------------------------------------------------------------

/// Interface state at one surface integration point.
struct TractionState {
  Vec2 jump = Vec2::Zero();
  double u_N = 0.0;           ///< gap (includes d0 for barrier laws)
  double u_T = 0.0;           ///< slip magnitude
  Vec2 m = Vec2::Zero();      ///< slip direction, zero when u_T == 0
  double p_N = 0.0;
  Vec2 t_T = Vec2::Zero();
  Vec2 t = Vec2::Zero();      ///< -p_N n + t_T
  Mat2 C = Mat2::Zero();      ///< dt / d[[u]]
  bool stick = false;         ///< penalty laws only: elastic-predictor branch

  double tau() const { return t_T.norm(); }
};

/// Traction update for the barrier law with smoothed Coulomb friction.
///
/// The working gap carries the initial offset, u_N = d0 + [[u]].n, so a
/// closed interface (zero jump) starts at p_N = p_opt. Friction is evaluated
/// in total form from the accumulated jump.
///
/// At zero slip the slip direction is reported as the zero vector. In two
/// dimensions the tangential traction is still differentiable there, with
/// derivative mu p_N m'(0) along the interface tangent, and that term is kept
/// in C so that a stuck interface is not left without tangential stiffness.
inline TractionState update_traction(const Vec2 &delta_jump, const Vec2 &previous_jump,
                                     const Vec2 &n, const BarrierParams &p) {
  TractionState s;
  s.jump = previous_jump + delta_jump;
  const double opening = s.jump.dot(n);
  s.u_N = p.d0 + opening;
  s.p_N = contact_pressure(s.u_N, p);
  const double k_N = normal_stiffness(s.u_N, p);

  const Vec2 slip = s.jump - opening * n;
  s.u_T = slip.norm();
  const Vec2 e = tangent_of(n);
  Vec2 dir = e;
  if (s.u_T > 0.0) {
    s.m = slip / s.u_T;
    dir = s.m;
  }
  const SmoothingValue mob = friction_smoothing(s.u_T, p.s_hat);
  s.t_T = mob.value * p.mu * s.p_N * s.m;
  s.t = -s.p_N * n + s.t_T;

  s.C = k_N * (n * n.transpose());
  if (p.mu > 0.0) {
    s.C -= p.mu * k_N * mob.value * (s.m * n.transpose());
    s.C += p.mu * s.p_N * mob.slope * (dir * dir.transpose());
  }
  return s;
}

inline TractionState update_traction(const Vec2 &jump, const Vec2 &n, const BarrierParams &p) {
  return update_traction(jump, Vec2::Zero(), n, p);
}

// ---------------------------------------------------------------------------
// Parameterization
// ---------------------------------------------------------------------------

/// (r - 1)[2 ln r - 1/r + 1]; p_N(r d_hat) = kappa d_hat * this.
inline double pressure_shape(double r) { return (r - 1.0) * (2.0 * std::log(r) - 1.0 / r + 1.0); }

/// Conditioning measure g(r) = k_N(r d_hat) d_hat / p_N(r d_hat) for r in (0,1).
inline double g_function(double r) {
  if (!(r > 0.0) || !(r < 1.0))
    throw std::domain_error("g_function needs 0 < d0/d_hat < 1");
  const double inv = 1.0 / r;
  const double num = -2.0 * std::log(r) - (1.0 - inv) * (3.0 + inv);
  return num / pressure_shape(r);
}

struct Minimum {
  double argmin = 0.0;
  double value = 0.0;
};

/// Golden-section search for the minimum of g on [lo, hi].
inline Minimum minimize_g(double lo = 0.01, double hi = 0.99, double tol = 1e-10) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = g_function(c);
  double fd = g_function(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = g_function(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = g_function(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, g_function(x)};
}

/// Recommended barrier parameters for a problem of size L: d_hat = 1e-4 L
/// (unless overridden), s_hat = d_hat, d0 = 0.376 d_hat, and kappa such that
/// p_N(d0) equals p_opt.
inline BarrierParams parameterize(double L, double p_opt,
                                  std::optional<double> d_hat_override = std::nullopt,
                                  double mu = 0.0) {
  if (!(L > 0.0) || !(p_opt > 0.0))
    throw InvalidConfig("parameterize needs positive domain size and pressure estimate");
  if (d_hat_override && !(*d_hat_override > 0.0))
    throw InvalidConfig("d_hat override must be positive");
  if (!(mu >= 0.0))
    throw InvalidConfig("friction coefficient must be non-negative");
  BarrierParams p;
  p.d_hat = d_hat_override.value_or(1e-4 * L);
  p.s_hat = p.d_hat;
  p.d0 = kInitialGapRatio * p.d_hat;
  p.kappa = p_opt / (pressure_shape(kInitialGapRatio) * p.d_hat);
  p.p_opt = p_opt;
  p.mu = mu;
  return p;
}

/// Initial normal stiffness balancing bulk and interface contributions.
inline double optimal_initial_stiffness(double E, double h) { return E / h; }

// ---------------------------------------------------------------------------
// Penalty comparator
// ---------------------------------------------------------------------------

/// Committed tangential state of a penalty integration point.
struct PenaltyHistory {
  Vec2 slip = Vec2::Zero();     ///< tangential jump at the last converged step
  Vec2 traction = Vec2::Zero(); ///< tangential traction at the last converged step
};

namespace detail {

/// Elastic predictor / radial return of the tangential traction, given the
/// normal response (p_N, k_N) already evaluated.
inline void penalty_tangential(TractionState &s, const Vec2 &n, double k_N, double alpha_T,
                               double mu, const PenaltyHistory &hist) {
  const Vec2 slip = s.jump - s.jump.dot(n) * n;
  s.u_T = slip.norm();
  if (s.u_T > 0.0)
    s.m = slip / s.u_T;
  const Vec2 dslip = slip - hist.slip;
  const Vec2 trial = hist.traction + alpha_T * (dslip - dslip.dot(n) * n);
  const double limit = mu * s.p_N;
  const double trial_norm = trial.norm();
  const Vec2 e = tangent_of(n);
  // a zero cone (open or frictionless) never sticks
  if (limit > 0.0 && trial_norm <= limit) {
    s.stick = true;
    s.t_T = trial;
    s.C += alpha_T * (e * e.transpose());
  } else {
    s.stick = false;
    const Vec2 dir = trial_norm > 0.0 ? Vec2(trial / trial_norm) : e;
    s.t_T = limit * dir;
    // dp_N/d[[u]] = -k_N n
    s.C -= mu * k_N * (dir * n.transpose());
  }
  s.t = -s.p_N * n + s.t_T;
}

} // namespace detail

/// Classical penalty law: p_N = alpha_N max(-u_N, 0) with u_N = [[u]].n and
/// a Coulomb return mapping on the tangential trial traction.
inline TractionState penalty_traction(const Vec2 &jump, const Vec2 &n, const PenaltyParams &p,
                                      const PenaltyHistory &hist = {}) {
  TractionState s;
  s.jump = jump;
  s.u_N = jump.dot(n);
  const double k_N = s.u_N < 0.0 ? p.alpha_N : 0.0;
  s.p_N = p.alpha_N * std::max(-s.u_N, 0.0);
  s.C = k_N * (n * n.transpose());
  detail::penalty_tangential(s, n, k_N, p.alpha_T, p.mu, hist);
  return s;
}

/// Barrier normal response with a penalty tangential law.
inline TractionState hybrid_traction(const Vec2 &jump, const Vec2 &n, const BarrierParams &b,
                                     double alpha_T, const PenaltyHistory &hist = {}) {
  TractionState s;
  s.jump = jump;
  const double opening = jump.dot(n);
  s.u_N = b.d0 + opening;
  s.p_N = contact_pressure(s.u_N, b);
  const double k_N = normal_stiffness(s.u_N, b);
  s.C = k_N * (n * n.transpose());
  detail::penalty_tangential(s, n, k_N, alpha_T, b.mu, hist);
  return s;
}

} // namespace xbarrier
