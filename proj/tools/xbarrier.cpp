// Command-line driver for the benchmark problems.
//
//   xbarrier run   --problem inclusion --mesh 200x200 --integration averaged --out out/incl
//   xbarrier study --kind mesh --problem horizontal_crack --meshes 11x11,25x25,51x51
//
// Exit codes: 0 success, 2 non-convergence, 3 configuration error, 4 I/O error.

#include "xbarrier/bench.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace xb = xbarrier;
namespace bench = xbarrier::bench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 2;
constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;

struct CommonOptions {
  std::string problem;
  std::string config_file;
  std::string mesh;
  std::string method;
  std::string integration;
  std::optional<double> d_hat;
  std::optional<int> steps;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App *cmd, CommonOptions &o) {
  cmd->add_option("--problem", o.problem, "horizontal_crack | inclined_crack | two_blocks | inclusion");
  cmd->add_option("--config", o.config_file, "key = value file applied over the registry defaults");
  cmd->add_option("--mesh", o.mesh, "element counts as <nx>x<ny>");
  cmd->add_option("--method", o.method, "barrier | penalty | hybrid");
  cmd->add_option("--integration", o.integration, "standard | averaged");
  cmd->add_option("--dhat", o.d_hat, "barrier thickness (m)");
  cmd->add_option("--steps", o.steps, "number of load steps");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--set", o.overrides, "extra key=value overrides")->take_all();
}

bench::ProblemConfig make_config(const CommonOptions &o) {
  bench::ProblemConfig c;
  if (!o.config_file.empty())
    c = bench::load_config(o.config_file, o.problem.empty() ? "horizontal_crack" : o.problem);
  else if (!o.problem.empty())
    c = bench::default_config(o.problem);
  else
    throw xb::InvalidConfig("either --problem or --config is required");
  if (!o.problem.empty() && o.problem != c.problem)
    throw xb::InvalidConfig("--problem conflicts with the config file");
  if (!o.mesh.empty())
    bench::apply_setting(c, "mesh", o.mesh);
  if (!o.method.empty())
    c.method = bench::parse_method(o.method);
  if (!o.integration.empty())
    c.scheme = bench::parse_scheme(o.integration);
  if (o.d_hat)
    c.d_hat = *o.d_hat;
  if (o.steps)
    c.steps = *o.steps;
  if (!o.out.empty())
    c.out_dir = o.out;
  for (const auto &kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw xb::InvalidConfig("--set expects key=value, got '" + kv + "'");
    bench::apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      out.push_back(item);
  return out;
}

std::vector<double> parse_values(const std::string &s) {
  std::vector<double> v;
  for (const auto &item : split_list(s)) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception &) {
      throw xb::InvalidConfig("bad number '" + item + "' in --values");
    }
  }
  return v;
}

void print_summary(const bench::Summary &s) {
  for (const auto &[k, v] : s)
    std::cout << k << " = " << v << '\n';
}

int do_run(const CommonOptions &o) {
  const bench::ProblemConfig c = make_config(o);
  const bench::BenchmarkResult r = bench::run_benchmark(c);
  print_summary(r.summary);
  return r.converged ? kExitOk : kExitNotConverged;
}

void write_text(const std::string &dir, const std::string &name, const std::string &text) {
  if (dir.empty())
    return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream os(std::filesystem::path(dir) / name);
  if (!os || !(os << text))
    throw xb::IoError("cannot write " + dir + "/" + name);
}

int do_study(const CommonOptions &o, const std::string &kind, const std::string &meshes,
             const std::string &values) {
  const bench::ProblemConfig c = make_config(o);
  std::ostringstream table;
  if (kind == "mesh") {
    std::vector<std::pair<int, int>> list;
    for (const auto &m : split_list(meshes))
      list.push_back(bench::parse_mesh(m));
    const bench::MeshStudy st = bench::convergence_study(c, list);
    table << "from,to,diff_uN,diff_uT,diff_pN,diff_tau\n";
    for (const auto &row : st.rows)
      table << row.from << ',' << row.to << ',' << bench::format_double(row.diff_uN) << ','
            << bench::format_double(row.diff_uT) << ',' << bench::format_double(row.diff_pN) << ','
            << bench::format_double(row.diff_tau) << '\n';
    std::cout << table.str();
    write_text(c.out_dir, "mesh_study.csv", table.str());
    return kExitOk;
  }
  if (kind == "kappa" || kind == "dhat") {
    const std::vector<double> v = parse_values(values);
    if (v.size() < 2)
      throw xb::InvalidConfig("--values needs at least two entries");
    const bench::SensitivityResult r =
        kind == "kappa" ? bench::kappa_sensitivity_study(c, v) : bench::dhat_study(c, v);
    table << (kind == "kappa" ? "p_opt" : "d_hat")
          << ",converged,max_rel_displacement_diff,max_rel_traction_diff\n";
    bool all = true;
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
      all = all && r.runs[i].converged;
      table << bench::format_double(r.values[i]) << ',' << (r.runs[i].converged ? "true" : "false")
            << ',' << bench::format_double(r.max_rel_displacement_diff[i]) << ','
            << bench::format_double(r.max_rel_traction_diff[i]) << '\n';
    }
    std::cout << table.str();
    write_text(c.out_dir, kind + "_study.csv", table.str());
    return all ? kExitOk : kExitNotConverged;
  }
  throw xb::InvalidConfig("unknown study kind '" + kind + "'");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Barrier-method XFEM contact benchmarks"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  CLI::App *run = app.add_subcommand("run", "run one benchmark configuration");
  add_common(run, run_opts);

  CommonOptions study_opts;
  std::string kind;
  std::string meshes = "11x11,25x25,51x51";
  std::string values;
  CLI::App *study = app.add_subcommand("study", "mesh, kappa or d_hat study");
  add_common(study, study_opts);
  study->add_option("--kind", kind, "mesh | kappa | dhat")->required();
  study->add_option("--meshes", meshes, "comma-separated <nx>x<ny> list (mesh study)");
  study->add_option("--values", values,
                    "comma-separated p_opt factors (kappa, first is the reference) or d_hat values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run)
      return do_run(run_opts);
    if (study_opts.problem.empty() && study_opts.config_file.empty())
      throw xb::InvalidConfig("either --problem or --config is required");
    if (kind == "kappa" && values.empty())
      values = "1,0.5";
    return do_study(study_opts, kind, meshes, values);
  } catch (const xb::IoError &e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const xb::InvalidConfig &e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const xb::UnsupportedTopology &e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception &e) {
    // singular systems, penetration, aborted studies
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitNotConverged;
  }
}
