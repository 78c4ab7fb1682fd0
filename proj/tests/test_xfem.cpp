#include "xbarrier/assembly.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace xbarrier;

TEST(ShapeFunctions, NodalInterpolationAndCentroid) {
  const Mesh m = build_structured_grid(1, 1, 1.0, 1.0);
  const auto a = shape_functions(m, 0, {-1.0, -1.0});
  EXPECT_DOUBLE_EQ(a.N[0], 1.0);
  EXPECT_DOUBLE_EQ(a.N[1], 0.0);
  EXPECT_DOUBLE_EQ(a.N[2], 0.0);
  EXPECT_DOUBLE_EQ(a.N[3], 0.0);
  const auto c = shape_functions(m, 0, {0.0, 0.0});
  for (double n : c.N)
    EXPECT_DOUBLE_EQ(n, 0.25);
}

TEST(ShapeFunctions, PartitionOfUnityAndGradients) {
  const Mesh m = build_structured_grid(3, 3, 0.6, 0.6);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Vec2 xi(u(rng), u(rng));
    const auto s = shape_functions(m, 4, xi);
    double sum = 0.0;
    Vec2 gsum = Vec2::Zero();
    for (int I = 0; I < 4; ++I) {
      sum += s.N[I];
      gsum += s.dN[I];
    }
    EXPECT_NEAR(sum, 1.0, 1e-14);
    EXPECT_NEAR(gsum.norm(), 0.0, 1e-12);
    // spatial gradient against finite differences in physical coordinates
    const Vec2 x = m.global_coords(4, xi);
    const double eps = 1e-7;
    for (int I = 0; I < 4; ++I) {
      const double dx = (shape_functions_at(m, 4, x + Vec2(eps, 0)).N[I] -
                         shape_functions_at(m, 4, x - Vec2(eps, 0)).N[I]) /
                        (2 * eps);
      const double dy = (shape_functions_at(m, 4, x + Vec2(0, eps)).N[I] -
                         shape_functions_at(m, 4, x - Vec2(0, eps)).N[I]) /
                        (2 * eps);
      EXPECT_NEAR(dx, s.dN[I].x(), 1e-6);
      EXPECT_NEAR(dy, s.dN[I].y(), 1e-6);
    }
  }
}

TEST(EnrichedShape, ShiftedHeaviside) {
  const Vec2 g(0.3, -0.2);
  EXPECT_DOUBLE_EQ(enriched_shape(0.4, g, 1, 1).value, 0.0);
  EXPECT_DOUBLE_EQ(enriched_shape(0.4, g, 0, 0).value, 0.0);
  EXPECT_DOUBLE_EQ(enriched_shape(0.4, g, 1, 0).value, 0.4);
  EXPECT_DOUBLE_EQ(enriched_shape(0.4, g, 0, 1).value, -0.4);
  EXPECT_EQ(enriched_shape(0.4, g, 0, 1).gradient, Vec2(-0.3, 0.2));
}

TEST(EnrichedShape, VanishesAtElementNodes) {
  const Mesh m = build_structured_grid(2, 2, 1.0, 1.0);
  const auto c = classify_elements(m, InterfaceGeometry::line_at_angle({0.0, 0.31}, 0.2));
  for (const auto &cut : c.cuts) {
    const auto &conn = m.elements[cut.element];
    for (int I = 0; I < 4; ++I) {
      const Vec2 &xI = m.nodes[conn[I]];
      const int H_at_node = c.nodal_heaviside[conn[I]];
      for (int J = 0; J < 4; ++J) {
        const auto s = shape_functions_at(m, cut.element, xI);
        const auto phi = enriched_shape(s.N[J], s.dN[J], H_at_node, c.nodal_heaviside[conn[J]]);
        EXPECT_NEAR(phi.value, 0.0, 1e-15);
      }
    }
  }
}

TEST(DofMapTest, Counts) {
  const Mesh one = build_structured_grid(1, 1, 1.0, 1.0);
  EXPECT_EQ(build_dof_map(one, classify_elements(one, InterfaceGeometry::line({0, 3}, {1, 0}))).n_enr, 0);
  EXPECT_EQ(build_dof_map(one, classify_elements(one, InterfaceGeometry::line({0, 0.5}, {1, 0}))).n_enr, 8);

  const Mesh m = build_structured_grid(11, 11, 1.0, 1.0);
  const auto c = classify_elements(m, InterfaceGeometry::line({0, 0.5}, {1, 0}));
  const auto d = build_dof_map(m, c);
  EXPECT_EQ(d.enriched_nodes.size(), 24u);
  EXPECT_EQ(d.n_enr, 48);
  EXPECT_EQ(d.n_std, 2 * 144);
  // enriched iff the node touches a cut element
  std::vector<char> touches(m.num_nodes(), 0);
  for (const auto &cut : c.cuts)
    for (int n : m.elements[cut.element])
      touches[n] = 1;
  for (std::size_t n = 0; n < m.num_nodes(); ++n)
    EXPECT_EQ(d.is_enriched(static_cast<int>(n)), touches[n] == 1);
  // contiguous blocks
  for (int k = 0; k < static_cast<int>(d.enriched_nodes.size()); ++k) {
    EXPECT_EQ(d.enr_dof(d.enriched_nodes[k], 0), d.n_std + 2 * k);
    EXPECT_EQ(d.enr_dof(d.enriched_nodes[k], 1), d.n_std + 2 * k + 1);
  }
}

TEST(Jump, ZeroAndConstantCoefficients) {
  const std::array<double, 4> N = {0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(displacement_jump(N, {Vec2::Zero(), Vec2::Zero(), Vec2::Zero(), Vec2::Zero()}),
            Vec2::Zero());
  const Vec2 c(0.7, -1.3);
  EXPECT_NEAR((displacement_jump(N, {c, c, c, c}) - c).norm(), 0.0, 1e-15);
}

TEST(Jump, LinearFieldInterpolatesAlongSegment) {
  const Mesh m = build_structured_grid(1, 1, 1.0, 1.0);
  const auto c = classify_elements(m, InterfaceGeometry::line_at_angle({0.0, 0.35}, 0.3));
  const auto d = build_dof_map(m, c);
  // a_j = A x_j + b, a linear field in the plane
  Eigen::Matrix2d A;
  A << 0.3, -0.1, 0.2, 0.5;
  const Vec2 b(0.01, -0.02);
  Vector X = Vector::Zero(d.size());
  for (int n : d.enriched_nodes) {
    const Vec2 a = A * m.nodes[n] + b;
    X[d.enr_dof(n, 0)] = a.x();
    X[d.enr_dof(n, 1)] = a.y();
  }
  const auto &cut = c.cuts.front();
  // a bilinear interpolant reproduces a linear field exactly
  for (double t : {0.0, 0.5, 1.0}) {
    const Vec2 x = cut.a + t * (cut.b - cut.a);
    const Vec2 j = displacement_jump(m, d, cut.element, x, view(X));
    EXPECT_NEAR((j - (A * x + b)).norm(), 0.0, 1e-14);
  }
}

TEST(Jump, EqualsDifferenceOfOneSidedExpansions) {
  const Mesh m = build_structured_grid(5, 5, 1.0, 1.0);
  const auto c = classify_elements(m, InterfaceGeometry::circle({0.52, 0.47}, 0.29));
  const auto d = build_dof_map(m, c);
  std::mt19937 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector X(d.size());
  for (auto &v : X)
    v = g(rng);
  for (const auto &cut : c.cuts)
    for (const auto &sp : interface_segment_quadrature(cut.a, cut.b)) {
      const Vec2 jump = displacement_jump(m, d, cut.element, sp.x, view(X));
      const Vec2 up = displacement(m, c, d, cut.element, sp.x, Side::positive, view(X));
      const Vec2 um = displacement(m, c, d, cut.element, sp.x, Side::negative, view(X));
      EXPECT_NEAR((jump - (up - um)).norm(), 0.0, 1e-12);
    }
}

TEST(AveragedProjection, Examples) {
  EXPECT_EQ(averaged_projection({1, 0}, {3, 0}, 0.5, 0.5), Vec2(2, 0));
  EXPECT_EQ(averaged_projection({1, 2}, {1, 2}, 0.3, 0.9), Vec2(1, 2));
  EXPECT_NEAR((averaged_projection({1, 0}, {3, 0}, 1.0, 3.0) - Vec2(2.5, 0)).norm(), 0.0, 1e-15);
}

TEST(AveragedProjection, Idempotent) {
  const Vec2 p = averaged_projection({0.3, -1.0}, {2.0, 0.4}, 0.2, 0.7);
  EXPECT_NEAR((averaged_projection(p, p, 0.2, 0.7) - p).norm(), 0.0, 1e-15);
}

TEST(RigidBody, TranslationGivesZeroStrain) {
  const Mesh m = build_structured_grid(6, 6, 1.2, 1.2);
  BoundaryConditions bc;
  ContactSettings cs;
  cs.barrier = parameterize(1.2, 1e6);
  const Model model(m, InterfaceGeometry::circle({0.61, 0.58}, 0.33),
                    MaterialPair::uniform({1e9, 0.25}), bc, cs);
  Vector X = Vector::Zero(model.num_dofs());
  for (std::size_t n = 0; n < m.num_nodes(); ++n) {
    X[model.dofs().std_dof(static_cast<int>(n), 0)] = 0.013;
    X[model.dofs().std_dof(static_cast<int>(n), 1)] = -0.021;
  }
  for (int e = 0; e < static_cast<int>(m.num_elements()); ++e)
    for (const auto &qp : subcell_volume_quadrature(m, e, model.classification()))
      EXPECT_LT(model.strain(e, qp.x, qp.side, view(X)).norm(), 1e-12);
}
