#include "equibound/synth.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "equibound/bounds.hpp"
#include "equibound/errors.hpp"
#include "equibound/rng.hpp"

namespace equibound {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace {

double l1_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::fabs(v);
  return s;
}

std::size_t source_dim(const CovariateSource& src) {
  if (std::holds_alternative<Gaussian2d>(src)) return 2;
  return std::get<DiscreteSource>(src).points.front().size();
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_pre == 0 || n_post == 0) throw ConfigError("n_pre and n_post must be positive");
  if (gamma_true < 1.0) throw ConfigError("gamma_true must be >= 1");
  if (group_offsets.empty()) throw ConfigError("at least one group offset required");
  if (const auto* gs = std::get_if<Gaussian2d>(&source)) {
    if (gs->sigma1 <= 0.0 || gs->sigma2 <= 0.0)
      throw ConfigError("gaussian sigmas must be positive");
  } else {
    const auto& ds = std::get<DiscreteSource>(source);
    if (ds.points.empty()) throw ConfigError("discrete source needs support points");
    if (ds.points.size() != ds.probs.size())
      throw ConfigError("discrete source points/probs size mismatch");
    const std::size_t dim = ds.points.front().size();
    double total = 0.0;
    for (const auto& p : ds.points)
      if (p.size() != dim) throw ConfigError("discrete support points differ in dimension");
    for (double p : ds.probs) {
      if (p < 0.0) throw ConfigError("discrete probabilities must be >= 0");
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw ConfigError("discrete probabilities must sum to 1");
  }
}

std::pair<AuditFrame, LatentTable> generate(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_pre + cfg.n_post;
  const double post_share = static_cast<double>(cfg.n_post) / static_cast<double>(n);
  const std::size_t dim = source_dim(cfg.source);
  const std::size_t n_groups = cfg.group_offsets.size();

  std::vector<double> x(n * dim);
  std::vector<std::int8_t> d(n), t(n), y(n);
  std::vector<std::int32_t> g(n);
  LatentTable latent;
  latent.y0.resize(n);
  latent.y1.resize(n);
  latent.p_treat_used.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    rng::Stream s(cfg.seed, i);
    const int di = s.bernoulli(post_share) ? 1 : 0;

    double l1 = 0.0;
    if (const auto* gs = std::get_if<Gaussian2d>(&cfg.source)) {
      const double x1 = gs->sigma1 * s.normal();
      const double x2 = gs->sigma2 * s.normal();
      x[0 * n + i] = x1;
      x[1 * n + i] = x2;
      l1 = std::fabs(x1) + std::fabs(x2);
    } else {
      const auto& ds = std::get<DiscreteSource>(cfg.source);
      double u = s.next_double();
      std::size_t pick = ds.points.size() - 1;
      double acc = 0.0;
      for (std::size_t j = 0; j < ds.probs.size(); ++j) {
        acc += ds.probs[j];
        if (u < acc) {
          pick = j;
          break;
        }
      }
      for (std::size_t j = 0; j < dim; ++j) x[j * n + i] = ds.points[pick][j];
      l1 = l1_norm(ds.points[pick]);
    }

    const std::size_t gi = s.below(n_groups);
    const double mu = logistic(l1 + 2.0);
    const int y0 = s.bernoulli(mu) ? 1 : 0;
    const int y1 = s.bernoulli(mu / 2.0) ? 1 : 0;
    const double score = logistic(l1 + cfg.group_offsets[gi]);

    d[i] = static_cast<std::int8_t>(di);
    g[i] = static_cast<std::int32_t>(gi);
    latent.y0[i] = static_cast<std::int8_t>(y0);
    latent.y1[i] = static_cast<std::int8_t>(y1);
    if (di == 1) {
      const double p_used = (y0 == 1) ? score / cfg.gamma_true : score;
      latent.p_treat_used[i] = p_used;
      t[i] = s.bernoulli(p_used) ? 1 : 0;
      y[i] = -1;
    } else {
      latent.p_treat_used[i] = 0.0;
      t[i] = 0;
      y[i] = static_cast<std::int8_t>(y0);  // consistency: observed y is y(0)
    }
  }

  return {AuditFrame::from_columns(dim, std::move(x), std::move(d), std::move(t),
                                   std::move(y), std::move(g)),
          std::move(latent)};
}

void save_latent(const LatentTable& latent, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write file: " + path.string());
  out << "y0,y1,p_treat_used\n";
  char buf[64];
  for (std::size_t i = 0; i < latent.y0.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", latent.p_treat_used[i]);
    out << int(latent.y0[i]) << ',' << int(latent.y1[i]) << ',' << buf << '\n';
  }
}

double oracle_true_rate(const AuditFrame& frame, const LatentTable& latent) {
  if (latent.y0.size() != frame.size())
    throw ConfigError("latent table does not cover the frame");
  std::size_t needy = 0, treated = 0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.d(i) == 1 && latent.y0[i] == 1) {
      ++needy;
      if (frame.t(i) == 1) ++treated;
    }
  }
  if (needy == 0) throw NoNeedyUnits("no post-era unit with y(0)=1");
  return static_cast<double>(treated) / static_cast<double>(needy);
}

PopulationNuisances population_nuisances(const SyntheticConfig& cfg) {
  cfg.validate();
  const auto* ds = std::get_if<DiscreteSource>(&cfg.source);
  if (!ds)
    throw UnsupportedSource("population nuisances require a discrete covariate source");

  PopulationNuisances pn;
  pn.points = ds->points;
  pn.prob = ds->probs;
  const std::size_t m = ds->points.size();
  pn.mu.resize(m);
  pn.pi.resize(m);
  pn.pbar.resize(m);
  pn.g0 = static_cast<double>(cfg.n_pre) / static_cast<double>(cfg.n_pre + cfg.n_post);
  for (std::size_t j = 0; j < m; ++j) {
    const double l1 = l1_norm(ds->points[j]);
    pn.mu[j] = logistic(l1 + 2.0);
    double pb = 0.0;
    for (double off : cfg.group_offsets) pb += logistic(l1 + off);
    pb /= static_cast<double>(cfg.group_offsets.size());
    pn.pbar[j] = pb;
    // marginal over the latent outcome: needy units get score / gamma_true
    pn.pi[j] = pb * (1.0 - pn.mu[j]) + (pb / cfg.gamma_true) * pn.mu[j];
    pn.c += pn.prob[j] * pn.g0 * pn.mu[j];
  }
  return pn;
}

std::size_t PopulationNuisances::match(std::span<const double> x) const {
  for (std::size_t j = 0; j < points.size(); ++j) {
    bool same = points[j].size() == x.size();
    for (std::size_t k = 0; same && k < x.size(); ++k) same = points[j][k] == x[k];
    if (same) return j;
  }
  throw DomainError("covariate vector not on the discrete support");
}

OracleResult oracle_population_bounds(const SyntheticConfig& cfg, double gamma) {
  const PopulationNuisances pn = population_nuisances(cfg);
  const GammaParam gp = GammaParam::finite(gamma);

  OracleResult r{};
  double rate_num = 0.0, rate_den = 0.0;
  for (std::size_t j = 0; j < pn.points.size(); ++j) {
    const NuisanceValues nv{pn.mu[j], pn.pi[j], pn.g0, pn.c};
    r.true_psi_l += pn.prob[j] * eval_terms(nv, Side::lower, GammaParam::infinity()).selected_value();
    r.true_psi_u += pn.prob[j] * eval_terms(nv, Side::upper, GammaParam::infinity()).selected_value();
    r.true_psi_l_gamma += pn.prob[j] * eval_terms(nv, Side::lower, gp).selected_value();
    r.true_psi_u_gamma += pn.prob[j] * eval_terms(nv, Side::upper, gp).selected_value();
    rate_num += pn.prob[j] * pn.mu[j] * pn.pbar[j] / cfg.gamma_true;
    rate_den += pn.prob[j] * pn.mu[j];
  }
  r.true_rate = rate_num / rate_den;
  return r;
}

}  // namespace equibound
