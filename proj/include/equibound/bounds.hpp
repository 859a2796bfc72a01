#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "equibound/nuisance.hpp"

namespace equibound {

enum class Side { lower, upper };

// Sensitivity parameter: a finite gamma >= 1, or infinity for arbitrary
// confounding (which drops the gamma term and leaves the base bounds).
struct GammaParam {
  double value = std::numeric_limits<double>::infinity();

  static GammaParam finite(double g);
  static GammaParam infinity() { return GammaParam{}; }
  bool is_finite() const { return std::isfinite(value); }
};

struct TermId {
  Side side;
  int index;  // 1, 2, or 3 (3 = the gamma-dependent term)
};

// Nuisance values at one unit: mu = P(Y=1|D=0,x), pi = P(T=1|D=1,x),
// g = P(D=0|x), c = P(Y=1,D=0).
struct NuisanceValues {
  double mu, pi, g, c;
};

// Per-unit conditional bound terms for one side, already weighted into the
// unconditional form (each term is theta_j(x); the bound is E[min/max]).
// selected is the argmin (upper) / argmax (lower), ties to the lowest index.
struct TermSet {
  Side side;
  double t1 = 0.0, t2 = 0.0;
  double t3 = 0.0;
  bool has_t3 = false;
  int selected = 1;

  double value(int index) const { return index == 1 ? t1 : index == 2 ? t2 : t3; }
  double selected_value() const { return value(selected); }
};

// Covariate-free bounds from the marginal treatment and baseline-event rates:
// lower = max(0, (p_treat + p_y0 - 1) / p_y0), upper = min(1, p_treat / p_y0).
std::pair<double, double> marginal_bounds(double p_treat, double p_y0);

// A_gamma(x) = gamma * pi * mu / ((gamma - 1) * mu + 1); the gamma term of the
// upper bound uses A_gamma, the lower bound uses A_{1/gamma}.
double gamma_ratio_term(double mu, double pi, double gamma_eff);

TermSet eval_terms(const NuisanceValues& nv, Side side, const GammaParam& gamma);

// argmin/argmax over the present terms; ties break to the lowest index.
int select_term(const TermSet& ts);

// Mean over units of the per-unit selected term, clipped to [0, 1].
double plugin_bound(const ScoredNuisances& scored, Side side, const GammaParam& gamma);

}  // namespace equibound
