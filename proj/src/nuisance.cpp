#include "equibound/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "equibound/errors.hpp"
#include "equibound/kernels.hpp"

namespace equibound {

namespace {

// In-place Cholesky solve of H x = b for a small dense SPD matrix.
// Returns false when a pivot is not strictly positive.
bool cholesky_solve(std::vector<double>& H, std::vector<double>& b, std::size_t m) {
  for (std::size_t j = 0; j < m; ++j) {
    double diag = H[j * m + j];
    for (std::size_t k = 0; k < j; ++k) diag -= H[j * m + k] * H[j * m + k];
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double root = std::sqrt(diag);
    H[j * m + j] = root;
    for (std::size_t i = j + 1; i < m; ++i) {
      double v = H[i * m + j];
      for (std::size_t k = 0; k < j; ++k) v -= H[i * m + k] * H[j * m + k];
      H[i * m + j] = v / root;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {  // L z = b
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= H[i * m + k] * b[k];
    b[i] = v / H[i * m + i];
  }
  for (std::size_t ii = m; ii-- > 0;) {  // L^T x = z
    double v = b[ii];
    for (std::size_t k = ii + 1; k < m; ++k) v -= H[k * m + ii] * b[k];
    b[ii] = v / H[ii * m + ii];
  }
  return true;
}

// Penalized negative log-likelihood via softplus, safe for saturated scores.
double objective(std::span<const double> z, std::span<const double> y, double l2,
                 std::span<const double> w) {
  double nll = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    const double softplus = std::max(zi, 0.0) + std::log1p(std::exp(-std::fabs(zi)));
    nll += softplus - y[i] * zi;
  }
  double pen = 0.0;
  for (std::size_t j = 1; j < w.size(); ++j) pen += w[j] * w[j];
  return nll + 0.5 * l2 * pen;
}

void linear_scores(const FeatureMatrix& X, std::span<const double> w,
                   std::span<double> z) {
  kernels::fill(z, w[0]);
  for (std::size_t j = 0; j < X.dim(); ++j) kernels::axpy(z, w[j + 1], X.col(j));
}

}  // namespace

FeatureMatrix FeatureMatrix::gather(const AuditFrame& frame,
                                    std::span<const std::uint32_t> rows) {
  FeatureMatrix m(rows.size(), frame.dim());
  for (std::size_t j = 0; j < frame.dim(); ++j) {
    std::span<const double> src = frame.x_column(j);
    std::span<double> dst = m.col(j);
    for (std::size_t r = 0; r < rows.size(); ++r) dst[r] = src[rows[r]];
  }
  return m;
}

double BinaryPredictor::predict(std::span<const double> x) const {
  double z = weights[0];
  for (std::size_t j = 0; j < x.size(); ++j) z = std::fma(weights[j + 1], x[j], z);
  double p;
  kernels::sigmoid({&p, 1}, {&z, 1});
  return p;
}

void BinaryPredictor::predict(const FeatureMatrix& X, std::span<double> out) const {
  linear_scores(X, weights, out);
  kernels::sigmoid(out, out);
}

BinaryPredictor fit_logistic(const FeatureMatrix& X, std::span<const double> labels,
                             const LogisticConfig& cfg) {
  const std::size_t n = X.rows();
  const std::size_t m = X.dim() + 1;
  if (n == 0) throw ConfigError("fit_logistic: empty training set");
  if (!(cfg.l2 > 0.0)) throw ConfigError("fit_logistic: l2 must be > 0");

  BinaryPredictor out;
  out.weights.assign(m, 0.0);
  out.meta.n_train = n;
  std::vector<double>& w = out.weights;

  std::vector<double> z(n), p(n), resid(n), wts(n);
  std::vector<double> score(m), H(m * m), step(m), w_try(m);

  linear_scores(X, w, z);
  double obj = objective(z, labels, cfg.l2, w);
  if (cfg.objective_trace) cfg.objective_trace->push_back(obj);

  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    kernels::sigmoid(p, z);
    for (std::size_t i = 0; i < n; ++i) resid[i] = p[i] - labels[i];
    score[0] = kernels::sum(resid);
    for (std::size_t j = 0; j < X.dim(); ++j)
      score[j + 1] = kernels::dot(X.col(j), resid) + cfg.l2 * w[j + 1];

    double max_score = 0.0;
    for (double s : score) max_score = std::max(max_score, std::fabs(s));
    if (max_score <= cfg.tol) {
      out.meta.converged = true;
      break;
    }

    for (std::size_t i = 0; i < n; ++i) wts[i] = p[i] * (1.0 - p[i]);
    H[0] = kernels::sum(wts);
    for (std::size_t j = 0; j < X.dim(); ++j) {
      const double v = kernels::dot(X.col(j), wts);
      H[(j + 1)] = v;
      H[(j + 1) * m] = v;
    }
    for (std::size_t j = 0; j < X.dim(); ++j)
      for (std::size_t k = 0; k <= j; ++k) {
        const double v = kernels::dot3(X.col(j), X.col(k), wts) +
                         (j == k ? cfg.l2 : 0.0);
        H[(j + 1) * m + (k + 1)] = v;
        H[(k + 1) * m + (j + 1)] = v;
      }

    step = score;
    std::vector<double> Hc = H;
    if (!cholesky_solve(Hc, step, m))
      throw DegenerateDesign("penalized normal equations are numerically singular");

    // Newton step with halving on objective increase.
    double eta = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h) {
      for (std::size_t j = 0; j < m; ++j) w_try[j] = w[j] - eta * step[j];
      linear_scores(X, w_try, z);
      const double obj_try = objective(z, labels, cfg.l2, w_try);
      if (obj_try <= obj + 1e-12 * (1.0 + std::fabs(obj))) {
        w = w_try;
        obj = obj_try;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (cfg.objective_trace) cfg.objective_trace->push_back(obj);
    if (!accepted) break;  // no descent direction left at this scale
  }

  out.meta.iterations = iter;
  out.meta.objective = obj;
  if (!out.meta.converged) {
    // final check in case max_iter landed exactly on a solution
    kernels::sigmoid(p, z);
    for (std::size_t i = 0; i < n; ++i) resid[i] = p[i] - labels[i];
    double max_score = std::fabs(kernels::sum(resid));
    for (std::size_t j = 0; j < X.dim(); ++j)
      max_score = std::max(max_score,
                           std::fabs(kernels::dot(X.col(j), resid) + cfg.l2 * w[j + 1]));
    out.meta.converged = max_score <= cfg.tol;
  }
  return out;
}

CrossFitNuisances fit_nuisances(const AuditFrame& frame, const FoldAssignment& folds,
                                const CrossFitConfig& cfg) {
  if (folds.fold.size() != frame.size())
    throw ConfigError("fold assignment does not match the frame");

  CrossFitNuisances out;
  out.k = folds.k;
  out.clip_delta = cfg.clip_delta;
  if (!(cfg.clip_delta > 0.0 && cfg.clip_delta < 0.5))
    throw ConfigError("clip_delta must lie in (0, 0.5)");

  for (int k = 0; k < folds.k; ++k) {
    std::vector<std::uint32_t> rows_mu, rows_pi, rows_all;
    std::size_t n_y1d0 = 0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (folds.fold[i] == k) continue;
      rows_all.push_back(static_cast<std::uint32_t>(i));
      if (frame.d(i) == 0) {
        rows_mu.push_back(static_cast<std::uint32_t>(i));
        if (frame.y(i) == 1) ++n_y1d0;
      } else {
        rows_pi.push_back(static_cast<std::uint32_t>(i));
      }
    }
    auto need = [&](bool ok, const char* what) {
      if (!ok)
        throw EmptyTrainingStratum("fold " + std::to_string(k) +
                                   ": complement has no " + what + " rows");
    };
    need(!rows_mu.empty(), "pre-era (d=0)");
    need(!rows_pi.empty(), "post-era (d=1)");
    need(n_y1d0 > 0, "(y=1, d=0)");

    auto labels_of = [&](const std::vector<std::uint32_t>& rows, Which which) {
      std::vector<double> lab(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t i = rows[r];
        lab[r] = which == Which::mu   ? frame.y(i)
                 : which == Which::pi ? frame.t(i)
                                      : (frame.d(i) == 0 ? 1.0 : 0.0);
      }
      return lab;
    };

    FeatureMatrix X_mu = FeatureMatrix::gather(frame, rows_mu);
    FeatureMatrix X_pi = FeatureMatrix::gather(frame, rows_pi);
    FeatureMatrix X_all = FeatureMatrix::gather(frame, rows_all);
    out.mu.push_back(fit_logistic(X_mu, labels_of(rows_mu, Which::mu), cfg.logistic));
    out.pi.push_back(fit_logistic(X_pi, labels_of(rows_pi, Which::pi), cfg.logistic));
    out.g.push_back(fit_logistic(X_all, labels_of(rows_all, Which::g), cfg.logistic));
    out.p_y1_d0.push_back(static_cast<double>(n_y1d0) /
                          static_cast<double>(rows_all.size()));
    if (cfg.keep_training_rows) {
      out.train_rows_mu.push_back(rows_mu);
      out.train_rows_pi.push_back(rows_pi);
      out.train_rows_g.push_back(rows_all);
    }
  }
  return out;
}

double predict_clipped(const CrossFitNuisances& nuis, Which which, int fold,
                       std::span<const double> x) {
  if (fold < 0 || fold >= nuis.k) throw ConfigError("fold index out of range");
  const BinaryPredictor& pred = which == Which::mu   ? nuis.mu[fold]
                                : which == Which::pi ? nuis.pi[fold]
                                                     : nuis.g[fold];
  const double p = pred.predict(x);
  return std::clamp(p, nuis.clip_delta, 1.0 - nuis.clip_delta);
}

ScoredNuisances score_frame(const AuditFrame& frame, const FoldAssignment& folds,
                            const CrossFitNuisances& nuis) {
  const std::size_t n = frame.size();
  ScoredNuisances s;
  s.mu.resize(n);
  s.pi.resize(n);
  s.gg.resize(n);
  s.c.resize(n);
  for (int k = 0; k < nuis.k; ++k) {
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < n; ++i)
      if (folds.fold[i] == k) rows.push_back(static_cast<std::uint32_t>(i));
    FeatureMatrix X = FeatureMatrix::gather(frame, rows);
    std::vector<double> buf(rows.size());
    auto scatter = [&](const BinaryPredictor& p, std::vector<double>& dst) {
      p.predict(X, buf);
      kernels::clamp(buf, nuis.clip_delta, 1.0 - nuis.clip_delta);
      for (std::size_t r = 0; r < rows.size(); ++r) dst[rows[r]] = buf[r];
    };
    scatter(nuis.mu[k], s.mu);
    scatter(nuis.pi[k], s.pi);
    scatter(nuis.g[k], s.gg);
    for (std::uint32_t i : rows) s.c[i] = nuis.p_y1_d0[k];
  }
  return s;
}

std::string nuisances_to_json(const CrossFitNuisances& nuis) {
  nlohmann::json j;
  j["k"] = nuis.k;
  j["clip_delta"] = nuis.clip_delta;
  auto dump = [&](const char* name, const std::vector<BinaryPredictor>& preds) {
    for (int k = 0; k < nuis.k; ++k) {
      nlohmann::json p;
      p["weights"] = preds[k].weights;
      p["converged"] = preds[k].meta.converged;
      p["iterations"] = preds[k].meta.iterations;
      p["n_train"] = preds[k].meta.n_train;
      j[name][std::to_string(k)] = std::move(p);
    }
  };
  dump("mu", nuis.mu);
  dump("pi", nuis.pi);
  dump("g", nuis.g);
  j["p_y1_d0"] = nuis.p_y1_d0;
  return j.dump(2);
}

}  // namespace equibound
