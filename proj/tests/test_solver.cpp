#include "xbarrier/bench.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace xbarrier;

namespace {

SparseMatrix from_dense(const Eigen::MatrixXd &A) { return A.sparseView(); }

// Square block with a linear displacement field prescribed on its boundary.
Model linear_patch(const Eigen::Matrix2d &A, double mu) {
  const Mesh mesh = build_structured_grid(6, 6, 1.2, 1.2);
  BoundaryConditions bc;
  for (int j = 0; j <= 6; ++j)
    for (int i = 0; i <= 6; ++i)
      if (i == 0 || j == 0 || i == 6 || j == 6) {
        const Vec2 u = A * mesh.nodes[mesh.node_id(i, j)];
        bc.dirichlet.push_back({mesh.node_id(i, j), 0, u.x()});
        bc.dirichlet.push_back({mesh.node_id(i, j), 1, u.y()});
      }
  ContactSettings cs;
  cs.method = ContactMethod::penalty;
  cs.penalty = {1e9, 1e9, mu};
  return Model(mesh, InterfaceGeometry::line({0.0, 0.55}, {1.0, 0.0}),
               MaterialPair::uniform({1e8, 0.25}), bc, cs);
}

} // namespace

TEST(LinearSolve, Identity) {
  const SparseMatrix I = from_dense(Eigen::MatrixXd::Identity(5, 5));
  Vector b(5);
  b << 1, -2, 3, 0.5, 7;
  EXPECT_EQ(linear_solve(I, b), b);
}

TEST(LinearSolve, Diagonal) {
  Eigen::MatrixXd A(2, 2);
  A << 2, 0, 0, 4;
  Vector b(2);
  b << 2, 4;
  const Vector x = linear_solve(from_dense(A), b);
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(LinearSolve, RandomSpdBackwardError) {
  std::mt19937 rng(42);
  std::normal_distribution<double> G(0.0, 1.0);
  Eigen::MatrixXd B(100, 100);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j)
      B(i, j) = G(rng);
  const Eigen::MatrixXd A = B * B.transpose() + 100.0 * Eigen::MatrixXd::Identity(100, 100);
  Vector b(100);
  for (auto &v : b)
    v = G(rng);
  DirectSolver s;
  const Vector x = s.solve(from_dense(A), b);
  EXPECT_LT((A * x - b).norm() / b.norm(), 1e-10);
  EXPECT_LT(s.backward_error(), 1e-10);
}

TEST(LinearSolve, SingularAndMismatchedSystems) {
  Eigen::MatrixXd A(2, 2);
  A << 1, 2, 2, 4;
  EXPECT_THROW(linear_solve(from_dense(A), Vector::Ones(2)), SingularSystem);
  EXPECT_THROW(linear_solve(from_dense(Eigen::MatrixXd::Identity(2, 2)), Vector::Ones(3)),
               InvalidConfig);
}

TEST(Newton, OpenInterfaceLinearProblemTakesOneIteration) {
  // vertical stretching opens the frictionless penalty interface
  Eigen::Matrix2d A;
  A << 1e-3, 2e-4, 0.0, 2e-3;
  const Model m = linear_patch(A, 0.0);
  const auto path = run_load_steps(m, 1);
  ASSERT_TRUE(path.report.converged);
  EXPECT_EQ(path.report.steps[0].iterations, 1);
  for (const auto &st : path.states.back()) {
    EXPECT_GT(st.u_N, 0.0);
    EXPECT_EQ(st.t, Vec2::Zero());
    EXPECT_EQ(st.C, Mat2::Zero());
  }
}

TEST(Newton, SuperpositionOfLoadSteps) {
  Eigen::Matrix2d A;
  A << 5e-4, 0.0, 1e-4, 1e-3;
  const Model m = linear_patch(A, 0.0);
  const auto one = run_load_steps(m, 1);
  const auto ten = run_load_steps(m, 10);
  ASSERT_TRUE(one.report.converged);
  ASSERT_TRUE(ten.report.converged);
  ASSERT_EQ(ten.solutions.size(), 10u);
  const Vector &a = one.solutions.back();
  const Vector &b = ten.solutions.back();
  EXPECT_LT((a - b).norm() / a.norm(), 1e-8);
  // intermediate steps are scaled copies
  EXPECT_LT((ten.solutions[4] - 0.5 * a).norm() / a.norm(), 1e-8);
}

TEST(Newton, ReportRecordsTestedNormsAndStopReason) {
  auto c = bench::default_config("horizontal_crack");
  c.nx = c.ny = 11;
  const Model m = bench::build_model(c);
  const auto path = run_load_steps(m, 1);
  ASSERT_TRUE(path.report.converged);
  const auto &s = path.report.steps[0];
  EXPECT_EQ(static_cast<int>(s.residual_norms.size()), s.iterations + 1);
  const double r0 = s.residual_norms.front();
  const double rl = s.residual_norms.back();
  EXPECT_TRUE((s.reason == StopReason::relative_tolerance && rl <= 1e-8 * r0) ||
              (s.reason == StopReason::absolute_tolerance && rl <= 1e-10));
  for (std::size_t k = 0; k + 1 < s.residual_norms.size(); ++k)
    EXPECT_GT(s.residual_norms[k], std::min(1e-8 * r0, 1e-10));
}

TEST(Newton, HorizontalCrackQuadraticTail) {
  auto c = bench::default_config("horizontal_crack");
  c.nx = c.ny = 11;
  const Model m = bench::build_model(c);
  const auto path = run_load_steps(m, 1);
  ASSERT_TRUE(path.report.converged);
  const auto &s = path.report.steps[0];
  EXPECT_GE(bench::tail_order(s), 1.7);
  // ||R_{k+1}|| / ||R_k||^2 stays bounded over the tail
  std::vector<double> r;
  for (double x : s.residual_norms)
    if (x > 10.0 * s.residual_floor)
      r.push_back(x);
  ASSERT_GE(r.size(), 3u);
  const double q1 = r[r.size() - 2] / (r[r.size() - 3] * r[r.size() - 3]);
  const double q2 = r[r.size() - 1] / (r[r.size() - 2] * r[r.size() - 2]);
  EXPECT_LT(q2, 10.0 * q1);
}

TEST(Newton, IteratesStayFeasible) {
  auto c = bench::default_config("horizontal_crack");
  c.nx = c.ny = 11;
  const Model m = bench::build_model(c);
  const auto path = run_load_steps(m, 1);
  ASSERT_TRUE(path.report.converged);
  EXPECT_GT(m.min_gap(view(path.solutions.back())), 0.0);
  for (const auto &st : path.states.back()) {
    EXPECT_GT(st.u_N, 0.0);
    EXPECT_LE(st.tau(), c.mu * st.p_N * (1.0 + 1e-12) + 1e-6);
  }
}

TEST(Newton, MaxIterationsGivesReportNotCrash) {
  auto c = bench::default_config("horizontal_crack");
  c.nx = c.ny = 11;
  c.newton.max_iterations = 1;
  const Model m = bench::build_model(c);
  LoadPath path;
  ASSERT_NO_THROW(path = run_load_steps(m, 2, c.newton));
  EXPECT_FALSE(path.report.converged);
  EXPECT_EQ(path.report.steps.size(), 1u);
  EXPECT_EQ(path.report.steps[0].reason, StopReason::max_iterations);
  const auto cont = run_load_steps(m, 2, c.newton, true);
  EXPECT_EQ(cont.report.steps.size(), 2u);
}

TEST(Newton, DeterministicReports) {
  auto c = bench::default_config("horizontal_crack");
  c.nx = c.ny = 11;
  const Model m = bench::build_model(c);
  const auto a = run_load_steps(m, 2);
  const auto b = run_load_steps(m, 2);
  ASSERT_EQ(a.report.steps.size(), b.report.steps.size());
  for (std::size_t i = 0; i < a.report.steps.size(); ++i) {
    EXPECT_EQ(a.report.steps[i].residual_norms, b.report.steps[i].residual_norms);
    EXPECT_EQ(a.report.steps[i].iterations, b.report.steps[i].iterations);
  }
  EXPECT_EQ(a.solutions.back(), b.solutions.back());
}

TEST(Newton, RejectsBadStepCount) {
  auto c = bench::default_config("horizontal_crack");
  c.nx = c.ny = 5;
  const Model m = bench::build_model(c);
  EXPECT_THROW(run_load_steps(m, 0), InvalidConfig);
}
