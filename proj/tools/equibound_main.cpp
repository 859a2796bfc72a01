// equibound command-line front end: audit a frame over a gamma grid, run
// synthetic coverage experiments, benchmark gamma-prime against an observed
// covariate, or generate synthetic datasets.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "equibound/errors.hpp"
#include "equibound/inference.hpp"
#include "equibound/report.hpp"
#include "equibound/rng.hpp"
#include "equibound/version.hpp"

namespace {

using nlohmann::json;
namespace eq = equibound;

int exit_code_for(const eq::AuditError& e) {
  switch (e.kind()) {
    case eq::ErrorKind::config: return 1;
    case eq::ErrorKind::data: return 2;
    case eq::ErrorKind::numeric: return 3;
  }
  return 3;
}

std::vector<double> build_grid(double lo, double hi, double step) {
  if (!(lo >= 1.0)) throw eq::ConfigError("--gamma-min must be >= 1");
  if (!(step > 0.0)) throw eq::ConfigError("--gamma-step must be > 0");
  if (!(hi >= lo)) throw eq::ConfigError("--gamma-max must be >= --gamma-min");
  std::vector<double> grid;
  const int count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) grid.push_back(lo + step * i);
  return grid;
}

struct AuditArgs {
  std::string input;
  std::vector<int> groups;
  double gamma_min = 1.0, gamma_max = 1.5, gamma_step = 0.01;
  double level = 0.95;
  int folds = 5;
  double clip = 1e-3, l2 = 1e-4;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct SimulateArgs {
  int trials = 100;
  std::size_t n_pre = 10000, n_post = 10000;
  double gamma_true = 1.5;
  std::vector<double> offsets = {-1.0};
  double level = 0.95;
  int folds = 5;
  double clip = 1e-3, l2 = 1e-4;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct BenchmarkArgs {
  std::string input;
  std::string z_column = "x1";
  int folds = 5;
  double l2 = 1e-4;
  double quantile = 1.0;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct GenerateArgs {
  std::size_t n_pre = 10000, n_post = 10000;
  double gamma_true = 1.5;
  std::vector<double> offsets = {-1.0};
  std::uint64_t seed = 1;
  std::string out = "frame.csv";
  std::string latent_out;
};

int run_audit(const AuditArgs& a) {
  json cfg = {{"command", "audit"},   {"input", a.input},
              {"groups", a.groups},   {"gamma_min", a.gamma_min},
              {"gamma_max", a.gamma_max}, {"gamma_step", a.gamma_step},
              {"level", a.level},     {"folds", a.folds},
              {"clip", a.clip},       {"l2", a.l2},
              {"seed", a.seed},       {"out_dir", a.out_dir}};

  eq::AuditFrame frame = eq::load_frame(a.input);
  eq::AuditConfig ac;
  ac.k_folds = a.folds;
  ac.seed = a.seed;
  ac.level = a.level;
  ac.crossfit.clip_delta = a.clip;
  ac.crossfit.logistic.l2 = a.l2;
  eq::InequityReport report =
      eq::audit_groups(frame, a.groups, build_grid(a.gamma_min, a.gamma_max, a.gamma_step), ac);

  std::filesystem::create_directories(a.out_dir);
  const std::string cfg_str = cfg.dump();
  eq::write_report_json(report, cfg_str, std::filesystem::path(a.out_dir) / "report.json");
  eq::write_curves_csv(report, cfg_str, std::filesystem::path(a.out_dir) / "curves.csv");
  for (const auto& [g, msg] : report.failed_groups)
    std::cerr << "group " << g << " skipped: " << msg << '\n';
  std::cout << "audited " << report.curves.size() << " group(s) over "
            << report.gamma_grid.size() << " gamma value(s)\n";
  return 0;
}

int run_simulate(const SimulateArgs& a) {
  if (a.trials < 1) throw eq::ConfigError("--trials must be >= 1");
  json cfg = {{"command", "simulate"}, {"trials", a.trials},
              {"n_pre", a.n_pre},      {"n_post", a.n_post},
              {"gamma_true", a.gamma_true}, {"offsets", a.offsets},
              {"level", a.level},      {"folds", a.folds},
              {"clip", a.clip},        {"l2", a.l2},
              {"seed", a.seed},        {"out_dir", a.out_dir}};

  eq::CrossFitConfig cf;
  cf.clip_delta = a.clip;
  cf.logistic.l2 = a.l2;

  const std::size_t n_total = a.n_pre + a.n_post;
  struct Row {
    int trial;
    const char* method;
    bool captured;
    double lo, hi, ci_lo, ci_hi, oracle;
  };
  std::vector<Row> rows;
  int cap_onestep = 0, cap_plugin_ci = 0, cap_plugin_point = 0;
  for (int trial = 0; trial < a.trials; ++trial) {
    eq::SyntheticConfig dgp;
    dgp.n_pre = a.n_pre;
    dgp.n_post = a.n_post;
    dgp.gamma_true = a.gamma_true;
    dgp.group_offsets = a.offsets;
    dgp.seed = eq::rng::derive(a.seed, static_cast<std::uint64_t>(trial));
    eq::CoverageTrial t = eq::coverage_trial(dgp, a.gamma_true, a.folds, a.level, cf);
    cap_onestep += t.captured_onestep;
    cap_plugin_ci += t.captured_plugin_ci;
    cap_plugin_point += t.captured_plugin_point;
    rows.push_back({trial, "onestep", t.captured_onestep, t.onestep.lower_point,
                    t.onestep.upper_point, t.onestep.ci_lo, t.onestep.ci_hi,
                    t.oracle_rate});
    rows.push_back({trial, "plugin_ci", t.captured_plugin_ci, t.plugin_lower,
                    t.plugin_upper, t.plugin_ci_lo, t.plugin_ci_hi, t.oracle_rate});
    rows.push_back({trial, "plugin_point", t.captured_plugin_point, t.plugin_lower,
                    t.plugin_upper, t.plugin_lower, t.plugin_upper, t.oracle_rate});
  }

  std::filesystem::create_directories(a.out_dir);
  char buf[256];
  {
    std::ofstream out(std::filesystem::path(a.out_dir) / "coverage.csv");
    out << "# equibound " << eq::kVersion << "\n# config " << cfg.dump() << '\n';
    out << "n,method,capture_rate\n";
    const double tt = a.trials;
    std::snprintf(buf, sizeof buf, "%zu,onestep,%.6f\n", n_total, cap_onestep / tt);
    out << buf;
    std::snprintf(buf, sizeof buf, "%zu,plugin_ci,%.6f\n", n_total, cap_plugin_ci / tt);
    out << buf;
    std::snprintf(buf, sizeof buf, "%zu,plugin_point,%.6f\n", n_total,
                  cap_plugin_point / tt);
    out << buf;
  }
  {
    // already ordered by (n, trial, method): one n, trials ascending, methods
    // emitted alphabetically
    std::ofstream out(std::filesystem::path(a.out_dir) / "trials.csv");
    out << "# equibound " << eq::kVersion << "\n# config " << cfg.dump() << '\n';
    out << "n,trial,method,captured,lower,upper,ci_lo,ci_hi,oracle_rate\n";
    for (const Row& r : rows) {
      std::snprintf(buf, sizeof buf, "%zu,%d,%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                    n_total, r.trial, r.method, r.captured ? 1 : 0, r.lo, r.hi,
                    r.ci_lo, r.ci_hi, r.oracle);
      out << buf;
    }
  }
  std::cout << "onestep capture " << cap_onestep << "/" << a.trials
            << ", plugin_ci " << cap_plugin_ci << "/" << a.trials
            << ", plugin_point " << cap_plugin_point << "/" << a.trials << '\n';
  return 0;
}

int run_benchmark(const BenchmarkArgs& a) {
  json cfg = {{"command", "benchmark"}, {"input", a.input},
              {"z_column", a.z_column}, {"folds", a.folds},
              {"l2", a.l2},             {"quantile", a.quantile},
              {"seed", a.seed},         {"out_dir", a.out_dir}};

  eq::AuditFrame frame = eq::load_frame(a.input);
  std::size_t z_index = 0;
  {
    std::string name = a.z_column;
    if (!name.empty() && name.front() == 'x') name.erase(0, 1);
    try {
      const unsigned long v = std::stoul(name);
      if (v < 1 || v > frame.dim()) throw std::out_of_range("");
      z_index = v - 1;
    } catch (const std::exception&) {
      throw eq::ConfigError("--z-column must name a covariate column like x3");
    }
  }
  eq::BenchmarkConfig bc;
  bc.k_folds = a.folds;
  bc.seed = a.seed;
  bc.logistic.l2 = a.l2;
  bc.quantile = a.quantile;
  eq::SensitivityBenchmark b = eq::benchmark_gamma_prime(frame, z_index, bc);

  std::filesystem::create_directories(a.out_dir);
  json out = {{"version", eq::kVersion},
              {"config", cfg},
              {"gamma_prime", b.gamma_prime},
              {"z_column", "x" + std::to_string(b.covariate_index + 1)},
              {"n_eval", b.n_eval}};
  std::ofstream f(std::filesystem::path(a.out_dir) / "gamma_prime.json");
  f << out.dump(2) << '\n';
  std::cout << "gamma_prime = " << b.gamma_prime << " (n_eval = " << b.n_eval << ")\n";
  return 0;
}

int run_generate(const GenerateArgs& a) {
  eq::SyntheticConfig dgp;
  dgp.n_pre = a.n_pre;
  dgp.n_post = a.n_post;
  dgp.gamma_true = a.gamma_true;
  dgp.group_offsets = a.offsets;
  dgp.seed = a.seed;
  auto [frame, latent] = eq::generate(dgp);
  eq::save_frame(frame, a.out);
  if (!a.latent_out.empty()) eq::save_latent(latent, a.latent_out);
  std::cout << "wrote " << frame.size() << " records to " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equibound: partial-identification audit of treatment rates among the needy"};
  app.set_version_flag("--version", eq::kVersion);
  app.set_config("--config", "", "TOML-style config file; flags override file values");
  app.require_subcommand(1);

  AuditArgs aa;
  CLI::App* audit = app.add_subcommand("audit", "audit a frame over a gamma grid");
  audit->add_option("--input", aa.input, "frame CSV")->required();
  audit->add_option("--groups", aa.groups, "group labels to audit (default: all)")
      ->delimiter(',');
  audit->add_option("--gamma-min", aa.gamma_min, "grid start (>= 1)");
  audit->add_option("--gamma-max", aa.gamma_max, "grid end");
  audit->add_option("--gamma-step", aa.gamma_step, "grid step");
  audit->add_option("--level", aa.level, "confidence level");
  audit->add_option("--folds", aa.folds, "cross-fitting folds");
  audit->add_option("--clip", aa.clip, "probability clipping delta");
  audit->add_option("--l2", aa.l2, "logistic ridge penalty");
  audit->add_option("--seed", aa.seed, "master seed");
  audit->add_option("--out-dir", aa.out_dir, "output directory");

  SimulateArgs sa;
  CLI::App* sim = app.add_subcommand("simulate", "synthetic coverage experiment");
  sim->add_option("--trials", sa.trials, "number of trials");
  sim->add_option("--n-pre", sa.n_pre, "pre-era sample count");
  sim->add_option("--n-post", sa.n_post, "post-era sample count");
  sim->add_option("--gamma-true", sa.gamma_true, "confounding strength of the DGP");
  sim->add_option("--offsets", sa.offsets, "per-group treatment score offsets")
      ->delimiter(',');
  sim->add_option("--level", sa.level, "confidence level");
  sim->add_option("--folds", sa.folds, "cross-fitting folds");
  sim->add_option("--clip", sa.clip, "probability clipping delta");
  sim->add_option("--l2", sa.l2, "logistic ridge penalty");
  sim->add_option("--seed", sa.seed, "master seed; trial i uses a derived stream");
  sim->add_option("--out-dir", sa.out_dir, "output directory");

  BenchmarkArgs ba;
  CLI::App* bench = app.add_subcommand("benchmark", "gamma-prime for an observed covariate");
  bench->add_option("--input", ba.input, "frame CSV")->required();
  bench->add_option("--z-column", ba.z_column, "binary covariate column, e.g. x3")
      ->required();
  bench->add_option("--folds", ba.folds, "cross-fitting folds");
  bench->add_option("--l2", ba.l2, "logistic ridge penalty");
  bench->add_option("--quantile", ba.quantile, "ratio quantile (1.0 = max)");
  bench->add_option("--seed", ba.seed, "master seed");
  bench->add_option("--out-dir", ba.out_dir, "output directory");

  GenerateArgs ga;
  CLI::App* gen = app.add_subcommand("generate", "write a synthetic frame");
  gen->add_option("--n-pre", ga.n_pre, "pre-era sample count");
  gen->add_option("--n-post", ga.n_post, "post-era sample count");
  gen->add_option("--gamma-true", ga.gamma_true, "confounding strength");
  gen->add_option("--offsets", ga.offsets, "per-group treatment score offsets")
      ->delimiter(',');
  gen->add_option("--seed", ga.seed, "master seed");
  gen->add_option("--out", ga.out, "frame CSV path");
  gen->add_option("--latent-out", ga.latent_out, "latent table CSV path (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << '\n';
    return 1;
  }

  try {
    if (audit->parsed()) return run_audit(aa);
    if (sim->parsed()) return run_simulate(sa);
    if (bench->parsed()) return run_benchmark(ba);
    if (gen->parsed()) return run_generate(ga);
  } catch (const eq::AuditError& e) {
    std::cerr << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 3;
  }
  return 1;
}
