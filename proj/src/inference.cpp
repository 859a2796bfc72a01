#include "equibound/inference.hpp"

#include <algorithm>
#include <cmath>

#include "equibound/errors.hpp"
#include "equibound/rng.hpp"

namespace equibound {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile argument must lie in (0, 1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    z = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    z = num / den;
  }
  return q < 0.0 ? -z : z;
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
}

}  // namespace

IntervalEstimate confidence_interval(const BoundEstimate& lower,
                                     const BoundEstimate& upper, double level,
                                     CiMode mode) {
  check_level(level);
  if (mode != CiMode::joint_minmax)
    throw ConfigError("per-term-union intervals need the per-term estimates");
  if (lower.side != Side::lower || upper.side != Side::upper)
    throw ConfigError("confidence_interval: sides are swapped");
  if (lower.n != upper.n) throw ConfigError("estimates come from different samples");
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double root_n = std::sqrt(static_cast<double>(lower.n));
  IntervalEstimate ci;
  ci.level = level;
  ci.mode = mode;
  ci.lower_point = lower.psi_hat;
  ci.upper_point = upper.psi_hat;
  ci.ci_lo = clamp01(lower.psi_hat_unclipped - z * lower.sigma_hat / root_n);
  ci.ci_hi = clamp01(upper.psi_hat_unclipped + z * upper.sigma_hat / root_n);
  return ci;
}

IntervalEstimate confidence_interval_union(std::span<const BoundEstimate> lower_terms,
                                           std::span<const BoundEstimate> upper_terms,
                                           double level) {
  check_level(level);
  if (lower_terms.empty() || lower_terms.size() != upper_terms.size())
    throw ConfigError("per-term union needs matching term sets on both sides");
  const double j = static_cast<double>(lower_terms.size());
  // alpha split evenly across the terms combined on each side
  const double z = normal_quantile(1.0 - (1.0 - level) / j / 2.0);

  IntervalEstimate ci;
  ci.level = level;
  ci.mode = CiMode::per_term_union;
  double lo_pt = -1e300, lo_ci = -1e300, up_pt = 1e300, up_ci = 1e300;
  const std::size_t n = lower_terms.front().n;
  const double root_n = std::sqrt(static_cast<double>(n));
  for (const BoundEstimate& b : lower_terms) {
    if (b.n != n) throw ConfigError("estimates come from different samples");
    lo_pt = std::max(lo_pt, b.psi_hat_unclipped);
    lo_ci = std::max(lo_ci, b.psi_hat_unclipped - z * b.sigma_hat / root_n);
  }
  for (const BoundEstimate& b : upper_terms) {
    if (b.n != n) throw ConfigError("estimates come from different samples");
    up_pt = std::min(up_pt, b.psi_hat_unclipped);
    up_ci = std::min(up_ci, b.psi_hat_unclipped + z * b.sigma_hat / root_n);
  }
  ci.lower_point = clamp01(lo_pt);
  ci.upper_point = clamp01(up_pt);
  ci.ci_lo = clamp01(lo_ci);
  ci.ci_hi = clamp01(up_ci);
  return ci;
}

namespace {

bool disjoint(const IntervalEstimate& a, const IntervalEstimate& b) {
  return a.ci_hi < b.ci_lo || b.ci_hi < a.ci_lo;
}

std::optional<double> threshold_from_overlap(const std::vector<double>& grid,
                                             const std::vector<bool>& overlap) {
  std::optional<double> star;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (overlap[i]) break;
    star = grid[i];
  }
  return star;
}

std::vector<IntervalEstimate> audit_one_group(const AuditFrame& slice,
                                              const std::vector<double>& grid,
                                              const AuditConfig& cfg, int group) {
  FoldAssignment folds = make_folds(slice, cfg.k_folds, rng::derive(cfg.seed, group));
  CrossFitNuisances nuis = fit_nuisances(slice, folds, cfg.crossfit);
  ScoredNuisances scored = score_frame(slice, folds, nuis);
  std::vector<IntervalEstimate> out;
  out.reserve(grid.size());
  for (double gamma : grid) {
    const GammaParam gp = GammaParam::finite(gamma);
    if (cfg.mode == CiMode::joint_minmax) {
      BoundEstimate lo = onestep_bound(slice, folds, scored, Side::lower, gp);
      BoundEstimate up = onestep_bound(slice, folds, scored, Side::upper, gp);
      out.push_back(confidence_interval(lo, up, cfg.level, cfg.mode));
    } else {
      std::vector<BoundEstimate> lows, ups;
      for (int idx = 1; idx <= 3; ++idx) {
        lows.push_back(perterm_onestep(slice, folds, scored, TermId{Side::lower, idx}, gp));
        ups.push_back(perterm_onestep(slice, folds, scored, TermId{Side::upper, idx}, gp));
      }
      out.push_back(confidence_interval_union(lows, ups, cfg.level));
    }
  }
  return out;
}

}  // namespace

InequityReport audit_groups(const AuditFrame& frame, const std::vector<int>& groups,
                            const std::vector<double>& gamma_grid,
                            const AuditConfig& config) {
  if (gamma_grid.empty()) throw ConfigError("gamma grid is empty");
  for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
    if (!(gamma_grid[i] >= 1.0)) throw ConfigError("gamma grid values must be >= 1");
    if (i > 0 && !(gamma_grid[i] > gamma_grid[i - 1]))
      throw ConfigError("gamma grid must be sorted ascending");
  }
  std::vector<int> want = groups;
  if (want.empty()) want.assign(frame.groups().begin(), frame.groups().end());

  InequityReport report;
  report.gamma_grid = gamma_grid;
  for (int g : want) {
    try {
      AuditFrame slice = slice_group(frame, g);
      report.curves.push_back(GroupCurve{g, audit_one_group(slice, gamma_grid, config, g)});
    } catch (const AuditError& e) {
      report.failed_groups.emplace_back(g, e.what());
    }
  }
  for (std::size_t a = 0; a < report.curves.size(); ++a) {
    for (std::size_t b = a + 1; b < report.curves.size(); ++b) {
      PairVerdict pv;
      pv.g_a = report.curves[a].group;
      pv.g_b = report.curves[b].group;
      pv.overlap.resize(gamma_grid.size());
      for (std::size_t i = 0; i < gamma_grid.size(); ++i)
        pv.overlap[i] = !disjoint(report.curves[a].points[i], report.curves[b].points[i]);
      pv.gamma_star = threshold_from_overlap(gamma_grid, pv.overlap);
      report.pairs.push_back(std::move(pv));
    }
  }
  return report;
}

std::optional<double> gamma_threshold(const InequityReport& report, int g, int g_prime) {
  for (const PairVerdict& pv : report.pairs) {
    if ((pv.g_a == g && pv.g_b == g_prime) || (pv.g_a == g_prime && pv.g_b == g))
      return threshold_from_overlap(report.gamma_grid, pv.overlap);
  }
  throw PairNotFound("pair (" + std::to_string(g) + ", " + std::to_string(g_prime) +
                     ") not in report");
}

SensitivityBenchmark benchmark_gamma_prime(const AuditFrame& frame, std::size_t z_index,
                                           const BenchmarkConfig& config) {
  if (z_index >= frame.dim()) throw ConfigError("z covariate index out of range");
  {
    std::span<const double> zc = frame.x_column(z_index);
    for (double v : zc)
      if (v != 0.0 && v != 1.0)
        throw NonBinaryCovariate("covariate x" + std::to_string(z_index + 1) +
                                 " takes values outside {0, 1}");
  }
  FoldAssignment folds = make_folds(frame, config.k_folds, config.seed);

  std::vector<double> worst;  // max(r, 1/r) per evaluation row
  for (int k = 0; k < folds.k; ++k) {
    std::vector<std::uint32_t> train, eval;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (frame.d(i) != 1) continue;
      (folds.fold[i] == k ? eval : train).push_back(static_cast<std::uint32_t>(i));
    }
    if (train.empty())
      throw EmptyTrainingStratum("fold " + std::to_string(k) + ": no post-era rows");
    if (eval.empty()) continue;

    FeatureMatrix X = FeatureMatrix::gather(frame, train);
    std::vector<double> labels(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) labels[r] = frame.t(train[r]);
    BinaryPredictor model = fit_logistic(X, labels, config.logistic);

    FeatureMatrix Xe = FeatureMatrix::gather(frame, eval);
    std::vector<double> p0(eval.size()), p1(eval.size());
    auto zcol = Xe.col(z_index);
    std::fill(zcol.begin(), zcol.end(), 0.0);
    model.predict(Xe, p0);
    std::fill(zcol.begin(), zcol.end(), 1.0);
    model.predict(Xe, p1);
    for (std::size_t r = 0; r < eval.size(); ++r) {
      const double ratio = p0[r] / p1[r];
      worst.push_back(std::max(ratio, 1.0 / ratio));
    }
  }
  if (worst.empty()) throw EmptyStratumError("no post-era evaluation rows");

  SensitivityBenchmark out;
  out.covariate_index = z_index;
  out.n_eval = worst.size();
  std::sort(worst.begin(), worst.end());
  if (!(config.quantile > 0.0 && config.quantile <= 1.0))
    throw ConfigError("benchmark quantile must lie in (0, 1]");
  const std::size_t m = worst.size();
  std::size_t idx = static_cast<std::size_t>(
      std::ceil(config.quantile * static_cast<double>(m)));
  idx = std::min(std::max<std::size_t>(idx, 1), m) - 1;
  out.gamma_prime = worst[idx];
  return out;
}

CoverageTrial coverage_trial(const SyntheticConfig& dgp, double gamma, int k_folds,
                             double level, const CrossFitConfig& crossfit) {
  auto [frame, latent] = generate(dgp);
  const GammaParam gp = GammaParam::finite(gamma);
  FoldAssignment folds = make_folds(frame, k_folds, rng::derive(dgp.seed, 0x666f6c64));
  CrossFitNuisances nuis = fit_nuisances(frame, folds, crossfit);
  ScoredNuisances scored = score_frame(frame, folds, nuis);

  CoverageTrial out;
  out.oracle_rate = oracle_true_rate(frame, latent);
  BoundEstimate lo = onestep_bound(frame, folds, scored, Side::lower, gp);
  BoundEstimate up = onestep_bound(frame, folds, scored, Side::upper, gp);
  out.onestep = confidence_interval(lo, up, level, CiMode::joint_minmax);
  out.plugin_lower = plugin_bound(scored, Side::lower, gp);
  out.plugin_upper = plugin_bound(scored, Side::upper, gp);

  const double z = normal_quantile(0.5 * (1.0 + level));
  const double root_n = std::sqrt(static_cast<double>(frame.size()));
  out.plugin_ci_lo = clamp01(out.plugin_lower - z * lo.sigma_hat / root_n);
  out.plugin_ci_hi = clamp01(out.plugin_upper + z * up.sigma_hat / root_n);

  out.captured_onestep = out.onestep.contains(out.oracle_rate);
  out.captured_plugin_ci =
      out.plugin_ci_lo <= out.oracle_rate && out.oracle_rate <= out.plugin_ci_hi;
  out.captured_plugin_point =
      out.plugin_lower <= out.oracle_rate && out.oracle_rate <= out.plugin_upper;
  return out;
}

}  // namespace equibound
