#include "equibound/correction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "equibound/errors.hpp"
#include "equibound/kernels.hpp"

namespace equibound {

double influence_theta1_u(const NuisanceValues& nv, const UnitObs& w, const IfContext& ctx) {
  const double ind_y1d0 = (w.d == 0 && w.y == 1) ? 1.0 : 0.0;
  double v = -ind_y1d0 / ctx.c * ctx.e_g_pi + nv.g * nv.pi;
  if (w.d == 1) v += (w.t - nv.pi) * nv.g / (1.0 - nv.g);
  v += nv.pi * ((w.d == 0 ? 1.0 : 0.0) - nv.g);
  return v / ctx.c;
}

double influence_theta2_u(const NuisanceValues& nv, const UnitObs& w, const IfContext& ctx) {
  if (w.d != 0) return 0.0;
  double v = nv.mu + (w.y - nv.mu);
  if (w.y == 1) v -= ctx.e_mu_d0 / ctx.p_y1_given_d0;
  return v / ctx.c;
}

double influence_theta1_l(const NuisanceValues& nv, const UnitObs& w, const IfContext& ctx) {
  double v = influence_theta1_u(nv, w, ctx);
  double extra = 0.0;
  if (w.d == 0) {
    if (w.y == 1) extra -= ctx.e_g_mu_m1 / ctx.c;
    extra += w.y - 1.0;
  }
  return v + extra / ctx.c;
}

double influence_theta3(const NuisanceValues& nv, const UnitObs& w, double gamma,
                        Side side, const IfContext& ctx) {
  const double ge = side == Side::upper ? gamma : 1.0 / gamma;
  const double denom = (ge - 1.0) * nv.mu + 1.0;
  const double a = ge * nv.pi * nv.mu / denom;
  const double ind_y1d0 = (w.d == 0 && w.y == 1) ? 1.0 : 0.0;
  double v = -ind_y1d0 / ctx.c * ctx.e_g_a + nv.g * a;
  v += a * ((w.d == 0 ? 1.0 : 0.0) - nv.g);
  if (w.d == 1) {
    v += (ge * nv.mu / denom) * (w.t - nv.pi) * nv.g / (1.0 - nv.g);
  } else {
    v += (ge * nv.pi / (denom * denom)) * (w.y - nv.mu);
  }
  return v / ctx.c;
}

double influence(const TermId& id, const NuisanceValues& nv, const UnitObs& w,
                 const GammaParam& gamma, const IfContext& ctx) {
  if (id.index == 3) {
    if (!gamma.is_finite()) throw ConfigError("gamma term requires a finite gamma");
    return influence_theta3(nv, w, gamma.value, id.side, ctx);
  }
  if (id.side == Side::upper)
    return id.index == 1 ? influence_theta1_u(nv, w, ctx) : influence_theta2_u(nv, w, ctx);
  return id.index == 1 ? influence_theta1_l(nv, w, ctx) : 0.0;
}

double influence_selected(const TermId& id, const NuisanceValues& nv, const UnitObs& w,
                          const GammaParam& gamma, const SelectionContext& ctx) {
  // v = (1/c) * ( -1[y=1,d=0] S / c + 1[d=0] q(x) + data residuals ), where
  // q is the selected term's numerator function (theta = g q / c) and the
  // residual pieces carry (T - pi) and (Y - mu).
  double q = 0.0, data = 0.0;
  switch (id.index) {
    case 1:
      if (id.side == Side::upper) {
        q = nv.pi;
        if (w.d == 1) data = (w.t - nv.pi) * nv.g / (1.0 - nv.g);
      } else {
        q = nv.pi + nv.mu - 1.0;
        if (w.d == 1)
          data = (w.t - nv.pi) * nv.g / (1.0 - nv.g);
        else
          data = w.y - nv.mu;
      }
      break;
    case 2:
      if (id.side == Side::upper) {
        q = nv.mu;
        if (w.d == 0) data = w.y - nv.mu;
      }
      break;
    case 3: {
      if (!gamma.is_finite()) throw ConfigError("gamma term requires a finite gamma");
      const double ge = id.side == Side::upper ? gamma.value : 1.0 / gamma.value;
      const double denom = (ge - 1.0) * nv.mu + 1.0;
      q = ge * nv.pi * nv.mu / denom;
      if (w.d == 1)
        data = (ge * nv.mu / denom) * (w.t - nv.pi) * nv.g / (1.0 - nv.g);
      else
        data = (ge * nv.pi / (denom * denom)) * (w.y - nv.mu);
      break;
    }
  }
  double v = (w.d == 0 ? q : 0.0) + data;
  if (w.d == 0 && w.y == 1) v -= ctx.e_g_q_selected / ctx.c;
  return v / ctx.c;
}

namespace {

UnitObs obs_at(const AuditFrame& frame, std::size_t i) {
  return UnitObs{frame.d(i), frame.t(i), frame.d(i) == 0 ? frame.y(i) : -1};
}

BoundEstimate finish(Side side, const GammaParam& gamma, std::vector<double> phi,
                     std::vector<std::int8_t> used) {
  BoundEstimate est;
  est.side = side;
  if (gamma.is_finite()) est.gamma = gamma.value;
  est.n = phi.size();
  est.psi_hat_unclipped = kernels::mean(phi);
  est.sigma_hat =
      est.n == 0 ? 0.0
                 : std::sqrt(kernels::sq_dev_sum(phi, est.psi_hat_unclipped) /
                             static_cast<double>(est.n));
  est.psi_hat = std::clamp(est.psi_hat_unclipped, 0.0, 1.0);
  est.phi = std::move(phi);
  est.term_used = std::move(used);
  return est;
}

}  // namespace

BoundEstimate onestep_bound(const AuditFrame& frame, const FoldAssignment& folds,
                            const ScoredNuisances& scored, Side side,
                            const GammaParam& gamma) {
  if (scored.size() != frame.size() || folds.fold.size() != frame.size())
    throw ConfigError("scored nuisances / folds do not match the frame");

  const std::size_t n = frame.size();
  std::vector<double> theta(n);
  std::vector<std::int8_t> used(n);
  // pass 1: plugin selection and the per-fold selected-term means
  std::vector<double> s_gq(folds.k, 0.0), n_fold(folds.k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const NuisanceValues nv{scored.mu[i], scored.pi[i], scored.gg[i], scored.c[i]};
    const TermSet ts = eval_terms(nv, side, gamma);
    theta[i] = ts.selected_value();
    used[i] = static_cast<std::int8_t>(ts.selected);
    s_gq[folds.fold[i]] += scored.c[i] * theta[i];  // g q = c theta
    n_fold[folds.fold[i]] += 1.0;
  }
  // pass 2: theta + correction, both evaluated with the unit's own fold
  std::vector<double> phi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int f = folds.fold[i];
    const NuisanceValues nv{scored.mu[i], scored.pi[i], scored.gg[i], scored.c[i]};
    const SelectionContext ctx{scored.c[i], s_gq[f] / n_fold[f]};
    phi[i] = theta[i] + influence_selected(TermId{side, used[i]}, nv, obs_at(frame, i),
                                           gamma, ctx);
  }
  return finish(side, gamma, std::move(phi), std::move(used));
}

BoundEstimate perterm_onestep(const AuditFrame& frame, const FoldAssignment& folds,
                              const ScoredNuisances& scored, const TermId& term,
                              const GammaParam& gamma) {
  if (scored.size() != frame.size() || folds.fold.size() != frame.size())
    throw ConfigError("scored nuisances / folds do not match the frame");
  if (term.index == 3 && !gamma.is_finite())
    throw ConfigError("gamma term requires a finite gamma");

  const std::size_t n = frame.size();
  // Evaluation-side scalars over the whole frame; these make the closed-form
  // cancellations (and the constant index-2 estimators) exact.
  double n_d0 = 0.0, n_y1d0 = 0.0, s_mu_d0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (frame.d(i) == 0) {
      n_d0 += 1.0;
      s_mu_d0 += scored.mu[i];
      if (frame.y(i) == 1) n_y1d0 += 1.0;
    }
  }
  const double c_ev = n_y1d0 / static_cast<double>(n);
  if (!(c_ev > 0.0)) throw EmptyStratumError("no (y=1, d=0) unit in the frame");

  const double ge = term.index == 3
                        ? (term.side == Side::upper ? gamma.value : 1.0 / gamma.value)
                        : 0.0;
  std::vector<double> phi(n, 0.0);
  std::vector<std::int8_t> used(n, static_cast<std::int8_t>(term.index));
  for (std::size_t i = 0; i < n; ++i) {
    const NuisanceValues nv{scored.mu[i], scored.pi[i], scored.gg[i], scored.c[i]};
    const UnitObs w = obs_at(frame, i);
    double v = 0.0;
    if (term.index == 1) {
      if (w.d == 1) {
        v = (w.t - nv.pi) * nv.g / (1.0 - nv.g);
      } else {
        v = nv.pi;
        if (term.side == Side::lower) v += w.y - 1.0;
      }
      v /= c_ev;
    } else if (term.index == 2) {
      if (term.side == Side::upper) {
        // raw theta + influence, kept for the variance of the constant estimator
        IfContext ctx{c_ev, 0.0, 0.0, 0.0, s_mu_d0 / n_d0, n_y1d0 / n_d0};
        v = nv.g * nv.mu / c_ev + influence_theta2_u(nv, w, ctx);
      } else {
        v = 0.0;
      }
    } else {
      const double denom = (ge - 1.0) * nv.mu + 1.0;
      if (w.d == 0) {
        v = ge * nv.pi * nv.mu / denom + (ge * nv.pi / (denom * denom)) * (w.y - nv.mu);
      } else {
        v = (ge * nv.mu / denom) * (w.t - nv.pi) * nv.g / (1.0 - nv.g);
      }
      v /= c_ev;
    }
    phi[i] = v;
  }
  BoundEstimate est = finish(term.side, gamma, std::move(phi), std::move(used));
  // the separated index-2 one-step estimates collapse to constants: their
  // correction cancels the plugin up to the empirical outcome rate itself
  if (term.index == 2) {
    est.psi_hat_unclipped = term.side == Side::upper ? 1.0 : 0.0;
    est.psi_hat = est.psi_hat_unclipped;
  }
  return est;
}

void write_phi_csv(const BoundEstimate& est, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write file: " + path.string());
  out << "unit,side,gamma,term_used,phi\n";
  char buf[64];
  for (std::size_t i = 0; i < est.phi.size(); ++i) {
    out << i << ',' << (est.side == Side::lower ? "lower" : "upper") << ',';
    if (est.gamma) {
      std::snprintf(buf, sizeof buf, "%.6f", *est.gamma);
      out << buf;
    } else {
      out << "inf";
    }
    std::snprintf(buf, sizeof buf, "%.6f", est.phi[i]);
    out << ',' << int(est.term_used[i]) << ',' << buf << '\n';
  }
}

}  // namespace equibound
