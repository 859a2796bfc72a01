#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "equibound/data_model.hpp"

namespace equibound {

// Data-generating process with a known confounding strength: treatment scores
// are logistic in |x|_1 shifted per group, and the score of a unit that would
// suffer the adverse outcome untreated is divided by gamma_true, which makes
// gamma_true the exact propensity ratio of the sensitivity model.
struct Gaussian2d {
  double sigma1 = 0.2;  // standard deviations
  double sigma2 = 0.1;
};

struct DiscreteSource {
  std::vector<std::vector<double>> points;  // support points in R^dim
  std::vector<double> probs;                // sums to 1
};

using CovariateSource = std::variant<Gaussian2d, DiscreteSource>;

struct SyntheticConfig {
  std::size_t n_pre = 10000;
  std::size_t n_post = 10000;
  CovariateSource source = Gaussian2d{};
  double gamma_true = 1.5;
  std::vector<double> group_offsets = {-1.0};  // group label = index
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

// Latent potential outcomes, parallel to the generated frame. Never read by
// estimators; exists so oracles can score them.
struct LatentTable {
  std::vector<std::int8_t> y0, y1;
  std::vector<double> p_treat_used;  // Bernoulli parameter used for T; 0 when d=0
};

std::pair<AuditFrame, LatentTable> generate(const SyntheticConfig& config);

void save_latent(const LatentTable& latent, const std::filesystem::path& path);

// Empirical counterfactual treatment rate among the needy:
// count(t=1, y0=1, d=1) / count(y0=1, d=1).
double oracle_true_rate(const AuditFrame& frame, const LatentTable& latent);

// Exact population nuisance values of a discrete-covariate DGP. mu, pi and
// the group-averaged treatment score are exact functionals of the config;
// g is constant because eras are assigned independently of x.
struct PopulationNuisances {
  std::vector<std::vector<double>> points;
  std::vector<double> prob;
  std::vector<double> mu;     // P(Y=1 | D=0, x)
  std::vector<double> pi;     // P(T=1 | D=1, x)
  std::vector<double> pbar;   // mean over groups of the base treatment score
  double g0 = 0.0;            // P(D=0)
  double c = 0.0;             // P(Y=1, D=0)

  std::size_t match(std::span<const double> x) const;  // exact point lookup
};

PopulationNuisances population_nuisances(const SyntheticConfig& config);

struct OracleResult {
  double true_rate;
  double true_psi_l, true_psi_u;              // arbitrary-confounding bounds
  double true_psi_l_gamma, true_psi_u_gamma;  // bounds at the supplied gamma
};

// Closed-form population bounds by weighted enumeration over the support.
// Requires a discrete covariate source.
OracleResult oracle_population_bounds(const SyntheticConfig& config, double gamma);

// Standard logistic function (generation-side; not a dispatched kernel).
double logistic(double z);

}  // namespace equibound
