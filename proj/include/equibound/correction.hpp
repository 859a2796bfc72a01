#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "equibound/bounds.hpp"

namespace equibound {

// Observed variables of one unit; y is -1 when unobserved (post-era).
struct UnitObs {
  int d, t, y;
};

// Sample expectations entering the influence functions, estimated on the
// evaluation sample as the nuisances themselves come from the complement.
struct IfContext {
  double c;              // P(Y=1, D=0)
  double e_g_pi;         // E[g(X) pi(X)]
  double e_g_mu_m1;      // E[g(X) (mu(X) - 1)]
  double e_g_a;          // E[g(X) A(X)] for the side's gamma_eff
  double e_mu_d0;        // E[mu(X) | D=0]
  double p_y1_given_d0;  // P(Y=1 | D=0)
};

double influence_theta1_u(const NuisanceValues& nv, const UnitObs& w, const IfContext& ctx);
double influence_theta2_u(const NuisanceValues& nv, const UnitObs& w, const IfContext& ctx);
double influence_theta1_l(const NuisanceValues& nv, const UnitObs& w, const IfContext& ctx);
// side picks gamma_eff: gamma for the upper bound, 1/gamma for the lower.
double influence_theta3(const NuisanceValues& nv, const UnitObs& w, double gamma,
                        Side side, const IfContext& ctx);
// Dispatch on TermId; the lower index-2 influence is identically zero.
double influence(const TermId& id, const NuisanceValues& nv, const UnitObs& w,
                 const GammaParam& gamma, const IfContext& ctx);

// Correction used inside the min/max estimator. Same per-term structure as
// the influence functions above, but the P(Y=1,D=0)-derivative piece is
// centered at the mean of the *selected* terms, E[g(X) q_{d(X)}(X)], instead
// of each term's own mean. The two coincide whenever one term is selected
// everywhere; the mixture centering keeps the correction mean-zero under any
// selection pattern, which the per-term centering does not.
struct SelectionContext {
  double c;                // P(Y=1, D=0)
  double e_g_q_selected;   // E[g(X) q_{d(X)}(X)] over the evaluation fold
};

double influence_selected(const TermId& id, const NuisanceValues& nv, const UnitObs& w,
                          const GammaParam& gamma, const SelectionContext& ctx);

// One-sided bias-corrected estimate. psi_hat is clipped to [0, 1] for
// reporting; inference uses the unclipped mean and sigma_hat, both over the
// per-unit phi = theta_selected + lambda_selected values.
struct BoundEstimate {
  Side side;
  std::optional<double> gamma;
  double psi_hat = 0.0;
  double psi_hat_unclipped = 0.0;
  double sigma_hat = 0.0;
  std::size_t n = 0;
  std::vector<double> phi;
  std::vector<std::int8_t> term_used;
};

// Min/max one-step estimator: per unit, select the active term from the
// plugin term values, then average theta + influence. Expectations inside the
// influence functions are taken over each unit's own evaluation fold.
BoundEstimate onestep_bound(const AuditFrame& frame, const FoldAssignment& folds,
                            const ScoredNuisances& scored, Side side,
                            const GammaParam& gamma);

// Separated per-term one-step estimators (the weaker bounds obtained by
// dropping the min/max). Closed forms; the upper index-2 estimator is the
// constant 1 and the lower index-2 estimator is the constant 0. Scalar
// expectations here are evaluation-side so those identities are exact.
BoundEstimate perterm_onestep(const AuditFrame& frame, const FoldAssignment& folds,
                              const ScoredNuisances& scored, const TermId& term,
                              const GammaParam& gamma);

void write_phi_csv(const BoundEstimate& est, const std::filesystem::path& path);

}  // namespace equibound
