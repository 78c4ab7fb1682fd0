#pragma once

#include "xbarrier/assembly.hpp"

#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace xbarrier {

// ---------------------------------------------------------------------------
// Direct linear solver
// ---------------------------------------------------------------------------

/// Sparse LU with partial pivoting. The symbolic analysis is reused as long as
/// the sparsity pattern size does not change. Up to three steps of iterative
/// refinement bring the backward error below 1e-10 when the factors allow it.
class DirectSolver {
public:
  Vector solve(const SparseMatrix &J, const Vector &rhs) {
    if (J.rows() != J.cols() || J.rows() != rhs.size())
      throw InvalidConfig("linear_solve: dimension mismatch");
    if (!analyzed_ || J.nonZeros() != pattern_nnz_ || J.rows() != pattern_rows_) {
      lu_.analyzePattern(J);
      analyzed_ = true;
      pattern_nnz_ = J.nonZeros();
      pattern_rows_ = J.rows();
    }
    lu_.factorize(J);
    if (lu_.info() != Eigen::Success)
      throw SingularSystem("sparse LU factorization failed: " + lu_.lastErrorMessage() +
                           diagnostic(J));
    Vector x = lu_.solve(rhs);
    const double bnorm = rhs.norm();
    backward_error_ = 0.0;
    if (bnorm > 0.0) {
      for (int it = 0; it < 3; ++it) {
        const Vector r = rhs - J * x;
        backward_error_ = r.norm() / bnorm;
        if (backward_error_ < 1e-12)
          break;
        x += lu_.solve(r);
      }
      backward_error_ = (rhs - J * x).norm() / bnorm;
    }
    if (!x.allFinite())
      throw SingularSystem("linear solve produced non-finite values" + diagnostic(J));
    return x;
  }

  double backward_error() const { return backward_error_; }

private:
  static std::string diagnostic(const SparseMatrix &J) {
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = 0.0;
    for (int i = 0; i < J.rows(); ++i) {
      const double d = std::abs(J.coeff(i, i));
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    return " (n = " + std::to_string(J.rows()) + ", |diag| in [" + std::to_string(dmin) + ", " +
           std::to_string(dmax) + "])";
  }

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
  Eigen::Index pattern_nnz_ = -1;
  Eigen::Index pattern_rows_ = -1;
  double backward_error_ = 0.0;
};

inline Vector linear_solve(const SparseMatrix &J, const Vector &rhs) {
  DirectSolver s;
  return s.solve(J, rhs);
}

// ---------------------------------------------------------------------------
// Newton's method
// ---------------------------------------------------------------------------

struct NewtonOptions {
  double tol_rel = 1e-8;
  double tol_abs = 1e-10;
  int max_iterations = 50;
  /// Residual-decrease backtracking; off by default.
  bool damping = false;
  /// Step halving that keeps every barrier gap positive.
  bool keep_feasible = true;
  int max_halvings = 60;
};

enum class StopReason { relative_tolerance, absolute_tolerance, max_iterations, diverged };

inline const char *to_string(StopReason r) {
  switch (r) {
  case StopReason::relative_tolerance:
    return "relative";
  case StopReason::absolute_tolerance:
    return "absolute";
  case StopReason::max_iterations:
    return "max_iterations";
  case StopReason::diverged:
    return "diverged";
  }
  return "?";
}

struct StepReport {
  int step = 0;
  std::vector<double> residual_norms; ///< as tested, recorded before each solve
  bool converged = false;
  StopReason reason = StopReason::max_iterations;
  int iterations = 0;       ///< linear solves performed
  int feasibility_cuts = 0; ///< total step halvings applied to keep gaps positive
  /// Round-off level of the residual at the last iterate: machine epsilon
  /// times the norm of |K| |X| + |f_ext| over the free rows.
  double residual_floor = 0.0;
};

struct NewtonReport {
  std::vector<StepReport> steps;
  bool converged = true;
  double wall_time = 0.0; ///< seconds
  int total_iterations() const {
    int n = 0;
    for (const auto &s : steps)
      n += s.iterations;
    return n;
  }
};

inline double residual_floor(const Model &model, const Vector &X, double load_scale) {
  const Vector mag = model.bulk_stiffness().cwiseAbs() * X.cwiseAbs() +
                     std::abs(load_scale) * model.external_load().cwiseAbs();
  double sum = 0.0;
  for (int i : model.free_dofs())
    sum += mag[i] * mag[i];
  return std::numeric_limits<double>::epsilon() * std::sqrt(sum);
}

/// Newton iteration on one load level. X holds the starting point on entry
/// (its constrained entries are overwritten with the prescribed values) and
/// the last iterate on exit.
inline StepReport newton_solve(const Model &model, Vector &X, double load_scale,
                               std::span<const PenaltyHistory> history,
                               const NewtonOptions &opt, DirectSolver &solver) {
  StepReport rep;
  impose_dirichlet(model, view(X), load_scale);
  const auto &free = model.free_dofs();
  const bool barrier = model.contact().barrier_normal();
  if (barrier && !(model.min_gap(view(X)) > 0.0))
    throw PenetrationError("starting point violates the barrier (non-positive gap)");

  double r0 = -1.0;
  for (int k = 0;; ++k) {
    const SparseSystem sys = assemble(model, view(X), load_scale, history);
    ReducedSystem red = apply_dirichlet(model, sys);
    const double r = red.R.norm();
    rep.residual_norms.push_back(r);
    rep.residual_floor = residual_floor(model, X, load_scale);
    if (!std::isfinite(r)) {
      rep.reason = StopReason::diverged;
      return rep;
    }
    if (r0 < 0.0)
      r0 = r;
    if (r <= opt.tol_abs) {
      rep.converged = true;
      rep.reason = StopReason::absolute_tolerance;
      return rep;
    }
    if (k > 0 && r <= opt.tol_rel * r0) {
      rep.converged = true;
      rep.reason = StopReason::relative_tolerance;
      return rep;
    }
    if (k >= opt.max_iterations) {
      rep.reason = StopReason::max_iterations;
      return rep;
    }

    const Vector dx = solver.solve(red.J, -red.R);
    ++rep.iterations;

    Vector trial = X;
    double alpha = 1.0;
    auto apply = [&](double a) {
      trial = X;
      for (std::size_t i = 0; i < free.size(); ++i)
        trial[free[i]] += a * dx[static_cast<Eigen::Index>(i)];
    };
    apply(alpha);
    if (barrier && opt.keep_feasible) {
      int cuts = 0;
      while (!(model.min_gap(view(trial)) > 0.0)) {
        if (++cuts > opt.max_halvings) {
          rep.reason = StopReason::diverged;
          return rep;
        }
        alpha *= 0.5;
        apply(alpha);
      }
      rep.feasibility_cuts += cuts;
    }
    if (opt.damping) {
      for (int cut = 0; cut < 30; ++cut) {
        if (barrier && !(model.min_gap(view(trial)) > 0.0)) {
          alpha *= 0.5;
          apply(alpha);
          continue;
        }
        const double rt = apply_dirichlet(model, assemble(model, view(trial), load_scale, history)).R.norm();
        if (rt < r)
          break;
        alpha *= 0.5;
        apply(alpha);
      }
    }
    X = std::move(trial);
  }
}

// ---------------------------------------------------------------------------
// Load stepping
// ---------------------------------------------------------------------------

struct LoadPath {
  std::vector<Vector> solutions;                     ///< per completed step
  std::vector<std::vector<TractionState>> states;    ///< per completed step
  NewtonReport report;
};

/// Applies the boundary data in n_steps equal increments. Each step starts
/// from the previous converged state; penalty histories are committed after
/// each converged step. Stops at the first failed step unless
/// continue_on_failure is set.
inline LoadPath run_load_steps(const Model &model, int n_steps, const NewtonOptions &opt = {},
                               bool continue_on_failure = false) {
  if (n_steps < 1)
    throw InvalidConfig("number of load steps must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  LoadPath path;
  DirectSolver solver;
  Vector X = Vector::Zero(model.num_dofs());
  std::vector<PenaltyHistory> hist(model.interface_points().size());
  for (int step = 1; step <= n_steps; ++step) {
    const double scale = static_cast<double>(step) / n_steps;
    StepReport rep = newton_solve(model, X, scale, hist, opt, solver);
    rep.step = step;
    const bool ok = rep.converged;
    path.report.steps.push_back(rep);
    const SparseSystem sys = assemble(model, view(X), scale, hist);
    path.solutions.push_back(X);
    path.states.push_back(sys.states);
    if (!ok) {
      path.report.converged = false;
      if (!continue_on_failure)
        break;
    }
    for (std::size_t q = 0; q < hist.size(); ++q) {
      const auto &st = sys.states[q];
      const Vec2 &n = model.interface_points()[q].normal;
      hist[q].slip = st.jump - st.jump.dot(n) * n;
      hist[q].traction = st.t_T;
    }
  }
  path.report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return path;
}

} // namespace xbarrier
