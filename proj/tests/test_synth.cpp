#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "equibound/bounds.hpp"
#include "equibound/errors.hpp"
#include "equibound/synth.hpp"

using namespace equibound;

namespace {

SyntheticConfig discrete3(std::size_t n_pre = 1000, std::size_t n_post = 1000,
                          double gamma_true = 1.5, std::uint64_t seed = 5) {
  SyntheticConfig cfg;
  cfg.n_pre = n_pre;
  cfg.n_post = n_post;
  cfg.source = DiscreteSource{{{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}}, {0.4, 0.35, 0.25}};
  cfg.gamma_true = gamma_true;
  cfg.group_offsets = {-1.0};
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("generation is deterministic and consistent") {
  SyntheticConfig cfg;
  cfg.n_pre = 500;
  cfg.n_post = 500;
  cfg.seed = 42;
  auto [f1, l1] = generate(cfg);
  auto [f2, l2] = generate(cfg);
  REQUIRE(f1.size() == f2.size());
  for (std::size_t i = 0; i < f1.size(); ++i) {
    CHECK(f1.d(i) == f2.d(i));
    CHECK(f1.t(i) == f2.t(i));
    CHECK(f1.x(i, 0) == f2.x(i, 0));
    CHECK(l1.y0[i] == l2.y0[i]);
  }
  // consistency: the observed pre-era outcome is the untreated potential outcome
  for (std::size_t i = 0; i < f1.size(); ++i)
    if (f1.d(i) == 0) CHECK(f1.y(i) == l1.y0[i]);
}

TEST_CASE("gamma_true=1 leaves the treatment score unconfounded") {
  SyntheticConfig cfg;
  cfg.n_pre = 200;
  cfg.n_post = 2000;
  cfg.gamma_true = 1.0;
  cfg.seed = 3;
  auto [frame, latent] = generate(cfg);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.d(i) != 1) continue;
    const double l1 = std::fabs(frame.x(i, 0)) + std::fabs(frame.x(i, 1));
    CHECK(latent.p_treat_used[i] == doctest::Approx(logistic(l1 - 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("group offsets reproduce the shifted treatment scores") {
  SyntheticConfig cfg;
  cfg.n_pre = 500;
  cfg.n_post = 4000;
  cfg.gamma_true = 1.5;
  cfg.group_offsets = {-1.0, -2.0};
  cfg.seed = 8;
  auto [frame, latent] = generate(cfg);
  bool saw[2] = {false, false};
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.d(i) != 1 || latent.y0[i] != 0) continue;  // unconfounded units
    const double l1 = std::fabs(frame.x(i, 0)) + std::fabs(frame.x(i, 1));
    const double off = frame.group(i) == 0 ? -1.0 : -2.0;
    CHECK(latent.p_treat_used[i] == doctest::Approx(logistic(l1 + off)).epsilon(1e-12));
    saw[frame.group(i)] = true;
  }
  CHECK(saw[0]);
  CHECK(saw[1]);
}

TEST_CASE("oracle_true_rate counts directly") {
  // three post-era units with (t, y0) = (1,1), (0,1), (1,0) -> rate 1/2
  std::vector<double> x = {0.0, 0.0, 0.0, 0.0};  // column-major, 1 dim, 4 units
  std::vector<std::int8_t> d = {0, 1, 1, 1}, t = {0, 1, 0, 1}, y = {1, -1, -1, -1};
  std::vector<std::int32_t> g(4, 0);
  AuditFrame f = AuditFrame::from_columns(1, x, d, t, y, g);
  LatentTable lat;
  lat.y0 = {1, 1, 1, 0};
  lat.y1 = {0, 0, 0, 0};
  lat.p_treat_used = {0, 0.5, 0.5, 0.5};
  CHECK(oracle_true_rate(f, lat) == 0.5);

  LatentTable none = lat;
  none.y0 = {1, 0, 0, 0};
  CHECK_THROWS_AS(oracle_true_rate(f, none), NoNeedyUnits);
}

TEST_CASE("unconfounded DGP: oracle rate matches the mean treatment probability") {
  SyntheticConfig cfg;
  cfg.n_pre = 1000;
  cfg.n_post = 100000;
  cfg.gamma_true = 1.0;
  cfg.seed = 11;
  auto [frame, latent] = generate(cfg);
  const double rate = oracle_true_rate(frame, latent);
  double sum_p = 0.0;
  std::size_t n_post = 0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.d(i) != 1) continue;
    sum_p += latent.p_treat_used[i];
    ++n_post;
  }
  CHECK(std::fabs(rate - sum_p / static_cast<double>(n_post)) < 0.01);
}

TEST_CASE("all-needy DGP: oracle rate equals the empirical treatment rate") {
  // force y0 = 1 by a latent table edit; then rate = P(T=1 | D=1) exactly
  SyntheticConfig cfg;
  cfg.n_pre = 200;
  cfg.n_post = 5000;
  cfg.seed = 21;
  auto [frame, latent] = generate(cfg);
  for (auto& v : latent.y0) v = 1;
  std::size_t post = 0, treated = 0;
  for (std::size_t i = 0; i < frame.size(); ++i)
    if (frame.d(i) == 1) {
      ++post;
      treated += frame.t(i);
    }
  CHECK(oracle_true_rate(frame, latent) ==
        static_cast<double>(treated) / static_cast<double>(post));
}

TEST_CASE("realized confounding ratio approaches gamma_true per cell") {
  SyntheticConfig cfg = discrete3(100000, 900000, 1.5, 17);
  auto [frame, latent] = generate(cfg);
  std::map<double, std::array<std::array<double, 2>, 2>> cells;  // l1 -> [y0][t] counts
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.d(i) != 1) continue;
    const double l1 = std::fabs(frame.x(i, 0)) + std::fabs(frame.x(i, 1));
    cells[l1][latent.y0[i]][frame.t(i)] += 1.0;
  }
  REQUIRE(cells.size() == 3);
  for (const auto& [l1, c] : cells) {
    const double p_t_given_y0_0 = c[0][1] / (c[0][0] + c[0][1]);
    const double p_t_given_y0_1 = c[1][1] / (c[1][0] + c[1][1]);
    CHECK(p_t_given_y0_0 / p_t_given_y0_1 == doctest::Approx(1.5).epsilon(0.05));
  }
}

TEST_CASE("stable baseline risk: y0 law does not depend on the era") {
  SyntheticConfig cfg = discrete3(200000, 200000, 1.5, 23);
  auto [frame, latent] = generate(cfg);
  std::map<double, std::array<std::array<double, 2>, 2>> cells;  // l1 -> [d][y0]
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double l1 = std::fabs(frame.x(i, 0)) + std::fabs(frame.x(i, 1));
    cells[l1][frame.d(i)][latent.y0[i]] += 1.0;
  }
  for (const auto& [l1, c] : cells) {
    const double m_pre = c[0][1] / (c[0][0] + c[0][1]);
    const double m_post = c[1][1] / (c[1][0] + c[1][1]);
    // two-sample z-tolerance at these counts
    CHECK(std::fabs(m_pre - m_post) < 0.01);
    CHECK(m_pre == doctest::Approx(logistic(l1 + 2.0)).epsilon(0.02));
  }
}

TEST_CASE("population nuisances: single support point by hand") {
  // pi = 0.3, mu = 0.2, g = 0.5 -> psi_u = min(pi/mu, 1) = 1
  SyntheticConfig cfg = discrete3();
  cfg.source = DiscreteSource{{{0.0}}, {1.0}};
  PopulationNuisances pn = population_nuisances(cfg);
  REQUIRE(pn.points.size() == 1);
  const NuisanceValues nv{0.2, 0.3, 0.5, 0.5 * 0.2};
  TermSet up = eval_terms(nv, Side::upper, GammaParam::infinity());
  CHECK(up.t1 == doctest::Approx(0.5 * 0.3 / 0.1));
  CHECK(up.t2 == doctest::Approx(1.0));
  CHECK(std::min(up.t1, up.t2) == doctest::Approx(std::min(0.3 / 0.2, 1.0)));
}

TEST_CASE("population bounds: gamma=1 point-identifies, huge gamma recovers base bounds") {
  SyntheticConfig cfg = discrete3();
  const PopulationNuisances pn = population_nuisances(cfg);

  OracleResult at1 = oracle_population_bounds(cfg, 1.0);
  double w_pi = 0.0;
  for (std::size_t j = 0; j < pn.points.size(); ++j)
    w_pi += pn.prob[j] * (pn.g0 * pn.mu[j] / pn.c) * pn.pi[j];
  CHECK(at1.true_psi_l_gamma == doctest::Approx(w_pi).epsilon(1e-12));
  CHECK(at1.true_psi_u_gamma == doctest::Approx(w_pi).epsilon(1e-12));

  OracleResult huge = oracle_population_bounds(cfg, 1e6);
  CHECK(huge.true_psi_l_gamma == doctest::Approx(huge.true_psi_l).epsilon(1e-6));
  CHECK(huge.true_psi_u_gamma == doctest::Approx(huge.true_psi_u).epsilon(1e-6));

  CHECK_THROWS_AS(oracle_population_bounds(SyntheticConfig{}, 1.5), UnsupportedSource);
}

TEST_CASE("oracle sandwich holds on generated data") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    SyntheticConfig cfg = discrete3(20000, 20000, 1.5, seed);
    auto [frame, latent] = generate(cfg);
    const double rate = oracle_true_rate(frame, latent);
    OracleResult pop = oracle_population_bounds(cfg, 1.5);
    CHECK(pop.true_psi_l <= pop.true_psi_l_gamma + 1e-12);
    CHECK(pop.true_psi_u_gamma <= pop.true_psi_u + 1e-12);
    CHECK(pop.true_psi_l_gamma <= pop.true_rate + 1e-12);
    CHECK(pop.true_rate <= pop.true_psi_u_gamma + 1e-12);
    // the empirical rate sits inside the population gamma bounds up to MC noise
    CHECK(rate > pop.true_psi_l_gamma - 0.02);
    CHECK(rate < pop.true_psi_u_gamma + 0.02);
  }
}

TEST_CASE("latent table persists alongside the frame") {
  SyntheticConfig cfg;
  cfg.n_pre = 50;
  cfg.n_post = 50;
  cfg.seed = 2;
  auto [frame, latent] = generate(cfg);
  auto dir = std::filesystem::temp_directory_path() / "equibound_tests";
  std::filesystem::create_directories(dir);
  save_latent(latent, dir / "latent.csv");
  std::ifstream in(dir / "latent.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "y0,y1,p_treat_used");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == frame.size());
}

TEST_CASE("config validation") {
  SyntheticConfig cfg;
  cfg.gamma_true = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SyntheticConfig{};
  cfg.source = DiscreteSource{{{0.0}, {1.0}}, {0.6, 0.6}};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SyntheticConfig{};
  cfg.n_pre = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
