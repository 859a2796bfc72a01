#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "equibound/correction.hpp"
#include "equibound/synth.hpp"

namespace equibound {

// Standard normal quantile (Wichura's AS241, double precision).
double normal_quantile(double p);

enum class CiMode { joint_minmax, per_term_union };

// Two-sided interval for the partially identified rate. In joint-minmax mode
// the endpoints are psi_l - z sigma_l/sqrt(n) and psi_u + z sigma_u/sqrt(n).
// In per-term-union mode each separated per-term bound gets its own interval
// at level 1 - (1-level)/J and the combined interval holds by union bound.
struct IntervalEstimate {
  double lower_point = 0.0, upper_point = 1.0;
  double ci_lo = 0.0, ci_hi = 1.0;
  double level = 0.95;
  CiMode mode = CiMode::joint_minmax;

  bool contains(double v) const { return ci_lo <= v && v <= ci_hi; }
};

IntervalEstimate confidence_interval(const BoundEstimate& lower,
                                     const BoundEstimate& upper, double level,
                                     CiMode mode = CiMode::joint_minmax);

IntervalEstimate confidence_interval_union(std::span<const BoundEstimate> lower_terms,
                                           std::span<const BoundEstimate> upper_terms,
                                           double level);

struct AuditConfig {
  int k_folds = 5;
  std::uint64_t seed = 1;
  CrossFitConfig crossfit;
  double level = 0.95;
  CiMode mode = CiMode::joint_minmax;
};

struct GroupCurve {
  int group = 0;
  std::vector<IntervalEstimate> points;  // parallel to the gamma grid
};

struct PairVerdict {
  int g_a = 0, g_b = 0;
  std::vector<bool> overlap;  // parallel to the gamma grid
  std::optional<double> gamma_star;
};

struct InequityReport {
  std::vector<double> gamma_grid;
  std::vector<GroupCurve> curves;
  std::vector<PairVerdict> pairs;
  std::vector<std::pair<int, std::string>> failed_groups;
};

// Audits each requested group on its own slice: fold, fit nuisances, compute
// one-step bounds at every grid gamma, and record pairwise CI-disjointness
// verdicts. A group whose slice fails validation is reported in failed_groups
// and the remaining groups still run.
InequityReport audit_groups(const AuditFrame& frame, const std::vector<int>& groups,
                            const std::vector<double>& gamma_grid,
                            const AuditConfig& config);

// Largest grid gamma such that the two groups' intervals are disjoint at
// every grid point up to and including it; nullopt when they already overlap
// at the grid minimum.
std::optional<double> gamma_threshold(const InequityReport& report, int g, int g_prime);

struct BenchmarkConfig {
  int k_folds = 5;
  std::uint64_t seed = 1;
  LogisticConfig logistic;
  double quantile = 1.0;  // 1.0 = max over evaluation rows
};

struct SensitivityBenchmark {
  double gamma_prime = 1.0;
  std::size_t covariate_index = 0;
  std::size_t n_eval = 0;
};

// Observed-covariate analogue of the sensitivity parameter: fit a treatment
// model on post-era rows with every covariate included, score each held-out
// post-era row with covariate z forced to 1 and to 0, and take the worst
// ratio max(r, 1/r) with r = p(z=0)/p(z=1).
SensitivityBenchmark benchmark_gamma_prime(const AuditFrame& frame, std::size_t z_index,
                                           const BenchmarkConfig& config);

// One synthetic coverage trial: generate, fit, estimate at the given gamma,
// and compare one-step and plugin intervals against the empirical oracle.
struct CoverageTrial {
  double oracle_rate = 0.0;
  IntervalEstimate onestep;
  double plugin_lower = 0.0, plugin_upper = 1.0;
  double plugin_ci_lo = 0.0, plugin_ci_hi = 1.0;  // plugin points, one-step margins
  bool captured_onestep = false;
  bool captured_plugin_ci = false;
  bool captured_plugin_point = false;
};

CoverageTrial coverage_trial(const SyntheticConfig& dgp, double gamma, int k_folds,
                             double level, const CrossFitConfig& crossfit = {});

}  // namespace equibound
