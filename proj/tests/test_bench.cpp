#include "xbarrier/bench.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace xbarrier;
using namespace xbarrier::bench;

namespace {

InterfaceProfile make_profile(const std::vector<double> &s, const std::vector<double> &p) {
  InterfaceProfile prof;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ProfileSample x;
    x.s = s[i];
    x.p_N = p[i];
    x.u_N = 1e-5;
    x.area = 1.0;
    x.contact = p[i] > 0.0;
    prof.samples.push_back(x);
  }
  return prof;
}

std::filesystem::path scratch_dir(const std::string &name) {
  auto p = std::filesystem::temp_directory_path() / ("xbarrier_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST(OscillationMetric, Examples) {
  EXPECT_EQ(oscillation_metric(std::vector<double>{3, 3, 3, 3}), 0.0);
  EXPECT_EQ(oscillation_metric(std::vector<double>{1, 2, 4, 4, 7, 9}), 0.0);
  EXPECT_EQ(oscillation_metric(std::vector<double>{9, 5, 5, 2}), 0.0);
  EXPECT_DOUBLE_EQ(oscillation_metric(std::vector<double>{1, 2, 1, 2, 1}), 1.5);
  EXPECT_EQ(oscillation_metric(std::vector<double>{1, 2}), 0.0);
  EXPECT_EQ(oscillation_metric(std::vector<double>{0, 0, 0}), 0.0);
}

TEST(OscillationMetric, PairedPlateausStillCountAsZigzag) {
  // the averaged scheme returns equal values at both points of an element
  EXPECT_DOUBLE_EQ(oscillation_metric(std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2, 1, 1}), 1.5);
}

TEST(OscillationMetric, SmoothHumpIsNearlyZero) {
  std::vector<double> v;
  for (int i = 0; i <= 100; ++i)
    v.push_back(std::sin(3.14159 * i / 100.0));
  EXPECT_LT(oscillation_metric(v), 0.02);
}

TEST(OscillationMetric, ProfileUsesContactSamplesOnly) {
  const auto prof = make_profile({0, 1, 2, 3, 4, 5}, {0, 5, 4, 3, 2, 0});
  EXPECT_EQ(oscillation_metric(prof, Field::p_N), 0.0);
  EXPECT_EQ(oscillation_metric(make_profile({0, 1}, {0, 0}), Field::p_N), 0.0);
}

TEST(Profiles, InterpolationAndL2Difference) {
  const auto a = make_profile({0, 1, 2}, {0, 2, 4});
  EXPECT_DOUBLE_EQ(interpolate(a, Field::p_N, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(interpolate(a, Field::p_N, -1.0), 0.0);
  EXPECT_DOUBLE_EQ(interpolate(a, Field::p_N, 9.0), 4.0);
  EXPECT_EQ(profile_l2_difference(a, a, Field::p_N), 0.0);
  // constant offset of 1 over a span of 2 has L2 norm sqrt(2)
  const auto b = make_profile({0, 1, 2}, {1, 3, 5});
  EXPECT_NEAR(profile_l2_difference(a, b, Field::p_N), std::sqrt(2.0), 1e-12);
  // ||2x|| on [0,2] = sqrt(32/3); the midpoint rule is second order
  EXPECT_NEAR(profile_l2_norm(a, Field::p_N), std::sqrt(32.0 / 3.0), 1e-4);
}

TEST(Profiles, ContactLengthAndSeparationAngle) {
  InterfaceProfile p;
  p.periodic = true;
  p.gap_threshold = 1.0;
  for (int i = 0; i < 360; ++i) {
    ProfileSample s;
    s.s = i + 0.5;
    s.area = 0.1;
    const double q = std::fmod(s.s, 90.0);
    // open for the first 30 degrees of each quadrant
    s.contact = q >= 30.0;
    s.u_N = s.contact ? 0.5 : 1.5;
    s.p_N = s.contact ? 1.0 : 0.0;
    p.samples.push_back(s);
  }
  EXPECT_NEAR(contact_fraction(p), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(contact_length(p), 0.1 * 240, 1e-9);
  EXPECT_NEAR(separation_angle(p), 30.0, 1e-9);
  EXPECT_EQ(quadrant_oscillation(p, Field::p_N), 0.0);
  // closing sample 29 adds 1/6 + 1/2 degree of contact on its two segments,
  // which is 1/6 degree once spread over the four quadrants
  p.samples[29].u_N = 0.9;
  EXPECT_NEAR(separation_angle(p), 30.0 - 1.0 / 6.0, 1e-12);
  // an open curve keeps the summed weights
  p.periodic = false;
  EXPECT_NEAR(contact_length(p), 0.1 * 240, 1e-9);
  EXPECT_THROW(contact_fraction(p), InvalidConfig);
}

TEST(Profiles, TailOrder) {
  EXPECT_NEAR(tail_order(std::vector<double>{1.0, 1e-1, 1e-2, 1e-4, 1e-8}), 2.0, 1e-12);
  EXPECT_NEAR(tail_order(std::vector<double>{1.0, 0.5, 0.25, 0.125}), 1.0, 1e-12);
  // norms at round-off level are left out
  EXPECT_NEAR(tail_order(std::vector<double>{1.0, 1e-2, 1e-4, 1e-8, 3e-15, 2e-15}, 1e-15), 2.0,
              1e-12);
  EXPECT_EQ(tail_order(std::vector<double>{1.0, 0.1}), 0.0);
}

TEST(Registry, CoversTheFourBenchmarks) {
  EXPECT_EQ(problem_ids().size(), 4u);
  const auto h = default_config("horizontal_crack");
  EXPECT_EQ(h.E_pos, 10e9);
  EXPECT_EQ(h.nu, 0.3);
  EXPECT_EQ(h.mu, 0.3);
  EXPECT_EQ(h.p_opt, 0.55e9);
  const auto i = default_config("inclined_crack");
  EXPECT_EQ(i.nx, 160);
  EXPECT_EQ(i.steps, 10);
  EXPECT_EQ(i.mu, 0.19);
  EXPECT_EQ(i.E_pos, 1e9);
  const auto t = default_config("two_blocks");
  EXPECT_EQ(t.nx, 40);
  EXPECT_EQ(t.ny, 41);
  EXPECT_EQ(t.E_pos, 1000e3);
  EXPECT_EQ(t.mu, 0.5);
  EXPECT_EQ(t.pressure, 200e3);
  EXPECT_EQ(t.p_opt, 200e3);
  const auto c = default_config("inclusion");
  EXPECT_EQ(c.nu, 0.0);
  EXPECT_EQ(c.traction_v, 10e3);
  EXPECT_EQ(c.E_pos, 1000e3);
  EXPECT_THROW(default_config("three_blocks"), InvalidConfig);
}

TEST(Registry, SetupSizes) {
  auto i = default_config("inclined_crack");
  const auto si = build_setup(i);
  EXPECT_EQ(si.mesh.num_nodes(), 25921u);
  EXPECT_EQ(si.mesh.num_elements(), 25600u);
  const auto st = build_setup(default_config("two_blocks"));
  EXPECT_EQ(st.mesh.num_nodes(), 1722u);
  EXPECT_EQ(st.mesh.num_elements(), 1640u);
  auto c = default_config("inclusion");
  c.nx = c.ny = 50;
  EXPECT_NEAR(build_setup(c).mesh.h, 0.2, 1e-15);
}

TEST(Registry, GeometryChecks) {
  auto c = default_config("inclusion");
  c.radius = 1.0; // passes through grid nodes
  EXPECT_THROW(build_setup(c), InvalidConfig);
  auto t = default_config("two_blocks");
  t.ny = 40;
  EXPECT_THROW(build_setup(t), InvalidConfig);
}

TEST(Registry, InclinedCrackGeometry) {
  auto c = default_config("inclined_crack");
  c.nx = c.ny = 20;
  const auto s = build_setup(c);
  const auto &line = s.geometry.as_line();
  EXPECT_NEAR(line.direction.y() / line.direction.x(), 0.2, 1e-14);
  const auto m = build_model(c);
  EXPECT_NEAR(m.contact().barrier.d_hat, 1e-4, 1e-18);
  EXPECT_NEAR(contact_pressure(m.contact().barrier.d0, m.contact().barrier), 10e6, 1e-3);
}

TEST(Registry, PenaltyDefaults) {
  auto c = default_config("horizontal_crack");
  c.nx = c.ny = 11;
  c.method = ContactMethod::penalty;
  const auto m = build_model(c);
  EXPECT_NEAR(m.contact().penalty.alpha_N, 10e9 * 11.0, 1e-3);
  EXPECT_EQ(m.contact().penalty.alpha_T, m.contact().penalty.alpha_N);
}

TEST(Config, ParsesKeyValueFiles) {
  std::istringstream in("# comment\nproblem = two_blocks\n  mesh = 20x21 # trailing\n\nmu=0.4\n");
  const auto kv = parse_key_values(in);
  EXPECT_EQ(kv.at("problem"), "two_blocks");
  EXPECT_EQ(kv.at("mesh"), "20x21");
  EXPECT_EQ(kv.at("mu"), "0.4");
  std::istringstream bad("mesh 20x21\n");
  EXPECT_THROW(parse_key_values(bad), InvalidConfig);
}

TEST(Config, AppliesSettings) {
  auto c = default_config("horizontal_crack");
  apply_setting(c, "mesh", "51x51");
  apply_setting(c, "method", "hybrid");
  apply_setting(c, "integration", "averaged");
  apply_setting(c, "d_hat", "1e-3");
  apply_setting(c, "max_iterations", "12");
  EXPECT_EQ(c.nx, 51);
  EXPECT_EQ(c.method, ContactMethod::hybrid);
  EXPECT_EQ(c.scheme, IntegrationScheme::averaged);
  EXPECT_EQ(*c.d_hat, 1e-3);
  EXPECT_EQ(c.newton.max_iterations, 12);
}

TEST(Config, RejectsBadInput) {
  auto c = default_config("horizontal_crack");
  EXPECT_THROW(apply_setting(c, "colour", "red"), InvalidConfig);
  EXPECT_THROW(apply_setting(c, "mu", "0.3x"), InvalidConfig);
  EXPECT_THROW(apply_setting(c, "steps", "2.5"), InvalidConfig);
  EXPECT_THROW(apply_setting(c, "method", "lagrange"), InvalidConfig);
  EXPECT_THROW(parse_mesh("10x"), InvalidConfig);
  EXPECT_THROW(parse_mesh("10*10"), InvalidConfig);
  EXPECT_THROW(parse_mesh("0x4"), InvalidConfig);
  EXPECT_EQ(parse_mesh("7x9"), std::make_pair(7, 9));
  EXPECT_THROW(load_config("/nonexistent/dir/cfg.txt"), IoError);
}

TEST(Config, LoadsFileOverRegistryDefaults) {
  const auto dir = scratch_dir("cfg");
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "c.cfg");
    os << "problem = inclusion\nmesh = 50x50\ninclusion_factor = 100\n";
  }
  const auto c = load_config(dir / "c.cfg");
  EXPECT_EQ(c.problem, "inclusion");
  EXPECT_EQ(c.nx, 50);
  EXPECT_EQ(c.inclusion_factor, 100.0);
  EXPECT_EQ(c.traction_v, 10e3);
  std::filesystem::remove_all(dir);
}

TEST(Config, MicroslipOverride) {
  auto c = default_config("horizontal_crack");
  c.d_hat = 1e-3;
  const auto s = build_setup(c);
  EXPECT_EQ(contact_settings(c, s).barrier.s_hat, 1e-3);
  apply_setting(c, "s_hat", "2e-4");
  EXPECT_EQ(contact_settings(c, s).barrier.s_hat, 2e-4);
  EXPECT_EQ(contact_settings(c, s).barrier.d_hat, 1e-3);
  c.s_hat = -1.0;
  EXPECT_THROW(contact_settings(c, s), InvalidConfig);
}

TEST(Config, ShippedFilesLoadAndBuild) {
  int files = 0;
  for (const auto &entry : std::filesystem::directory_iterator(XB_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg")
      continue;
    ++files;
    const auto c = load_config(entry.path());
    EXPECT_NO_THROW(build_setup(c)) << entry.path();
    const auto ids = problem_ids();
    EXPECT_NE(std::find(ids.begin(), ids.end(), c.problem), ids.end());
  }
  EXPECT_GE(files, 4);
  const auto h = load_config(std::filesystem::path(XB_CONFIG_DIR) / "horizontal_crack.cfg");
  const auto d = default_config("horizontal_crack");
  EXPECT_EQ(h.top_shear, d.top_shear);
  EXPECT_EQ(h.p_opt, d.p_opt);
}

TEST(RunBenchmark, WritesOutputs) {
  auto c = default_config("horizontal_crack");
  c.nx = c.ny = 11;
  c.steps = 2;
  const auto dir = scratch_dir("run");
  c.out_dir = dir.string();
  const auto r = run_benchmark(c);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.profiles.size(), 2u);
  for (const char *f : {"profile.csv", "profile_step001.csv", "profile_step002.csv",
                        "convergence.csv", "summary.txt"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const std::string prof = slurp(dir / "profile.csv");
  EXPECT_EQ(prof.substr(0, prof.find('\n')), "s,uN,uT,pN,tau,status");
  const std::string conv = slurp(dir / "convergence.csv");
  EXPECT_EQ(conv.substr(0, conv.find('\n')), "step,iter,residual_norm");
  const std::string sum = slurp(dir / "summary.txt");
  for (const char *k : {"max_uN", "max_uT", "oscillation_pN", "total_iterations", "converged"})
    EXPECT_NE(sum.find(std::string(k) + " = "), std::string::npos) << k;
  // samples are sorted and one per surface point
  const auto &p = r.final_profile();
  for (std::size_t i = 1; i < p.samples.size(); ++i)
    EXPECT_LE(p.samples[i - 1].s, p.samples[i].s);
  // rerunning gives byte-identical profiles
  const auto again = scratch_dir("run2");
  c.out_dir = again.string();
  run_benchmark(c);
  EXPECT_EQ(slurp(again / "profile.csv"), prof);
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(again);
}

TEST(RunBenchmark, BarrierProfileInvariants) {
  auto c = default_config("horizontal_crack");
  c.nx = c.ny = 11;
  const auto r = run_benchmark(c);
  ASSERT_TRUE(r.converged);
  const double d_hat = 1e-4;
  for (const auto &s : r.final_profile().samples) {
    EXPECT_GT(s.u_N, 0.0);
    EXPECT_GE(s.p_N, 0.0);
    if (s.p_N > 0.0)
      EXPECT_LT(s.u_N, d_hat);
  }
}

TEST(Studies, IdenticalMeshesAndKappaGiveZeroDifference) {
  auto c = default_config("horizontal_crack");
  c.nx = c.ny = 11;
  const auto st = convergence_study(c, {{11, 11}, {11, 11}});
  ASSERT_EQ(st.rows.size(), 1u);
  EXPECT_EQ(st.rows[0].diff_pN, 0.0);
  EXPECT_EQ(st.rows[0].diff_uT, 0.0);
  const auto k = kappa_sensitivity_study(c, {1.0, 1.0});
  EXPECT_EQ(k.max_rel_displacement_diff[1], 0.0);
  EXPECT_EQ(k.max_rel_traction_diff[1], 0.0);
  EXPECT_THROW(convergence_study(c, {{11, 11}}), InvalidConfig);
}
