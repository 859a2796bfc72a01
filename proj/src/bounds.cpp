#include "equibound/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "equibound/errors.hpp"
#include "equibound/kernels.hpp"

namespace equibound {

GammaParam GammaParam::finite(double g) {
  if (!(g >= 1.0)) throw ConfigError("gamma must be >= 1");
  GammaParam p;
  p.value = g;
  return p;
}

std::pair<double, double> marginal_bounds(double p_treat, double p_y0) {
  if (!(p_treat >= 0.0 && p_treat <= 1.0) || !(p_y0 >= 0.0 && p_y0 <= 1.0))
    throw DomainError("marginal rates must lie in [0, 1]");
  if (p_y0 == 0.0) throw DomainError("baseline event rate is zero");
  const double lower = std::max(0.0, (p_treat + p_y0 - 1.0) / p_y0);
  const double upper = std::min(1.0, p_treat / p_y0);
  return {lower, upper};
}

double gamma_ratio_term(double mu, double pi, double gamma_eff) {
  return gamma_eff * pi * mu / ((gamma_eff - 1.0) * mu + 1.0);
}

TermSet eval_terms(const NuisanceValues& nv, Side side, const GammaParam& gamma) {
  TermSet ts;
  ts.side = side;
  const double w = nv.g / nv.c;
  if (side == Side::upper) {
    ts.t1 = w * nv.pi;
    ts.t2 = w * nv.mu;
    if (gamma.is_finite()) {
      ts.has_t3 = true;
      ts.t3 = w * gamma_ratio_term(nv.mu, nv.pi, gamma.value);
    }
  } else {
    ts.t1 = w * (nv.pi + nv.mu - 1.0);
    ts.t2 = 0.0;
    if (gamma.is_finite()) {
      ts.has_t3 = true;
      ts.t3 = w * gamma_ratio_term(nv.mu, nv.pi, 1.0 / gamma.value);
    }
  }
  ts.selected = select_term(ts);
  return ts;
}

int select_term(const TermSet& ts) {
  const int count = ts.has_t3 ? 3 : 2;
  int best = 1;
  for (int j = 2; j <= count; ++j) {
    if (ts.side == Side::upper ? ts.value(j) < ts.value(best)
                               : ts.value(j) > ts.value(best))
      best = j;
  }
  return best;
}

double plugin_bound(const ScoredNuisances& scored, Side side, const GammaParam& gamma) {
  const std::size_t n = scored.size();
  std::vector<double> sel(n);
  for (std::size_t i = 0; i < n; ++i) {
    const NuisanceValues nv{scored.mu[i], scored.pi[i], scored.gg[i], scored.c[i]};
    sel[i] = eval_terms(nv, side, gamma).selected_value();
  }
  return std::clamp(kernels::mean(sel), 0.0, 1.0);
}

}  // namespace equibound
