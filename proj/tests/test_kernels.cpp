#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "equibound/kernels.hpp"
#include "equibound/rng.hpp"

namespace k = equibound::kernels;
using equibound::rng::Stream;

namespace {

std::vector<double> random_vec(Stream& s, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * s.next_double();
  return v;
}

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

struct BackendGuard {
  k::Backend saved;
  BackendGuard() : saved(k::active_backend()) {}
  ~BackendGuard() { k::force_backend(saved); }
};

}  // namespace

TEST_CASE("sigmoid matches the exact logistic closely and saturates") {
  std::vector<double> z, p;
  for (double v = -50.0; v <= 50.0; v += 0.0137) z.push_back(v);
  p.resize(z.size());
  k::sigmoid(p, z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double exact = 1.0 / (1.0 + std::exp(-z[i]));
    CHECK(p[i] == doctest::Approx(exact).epsilon(1e-14));
    CHECK(p[i] >= 0.0);
    CHECK(p[i] <= 1.0);
  }
  double one, tiny;
  double zp = 80.0, zm = -80.0;
  k::sigmoid({&one, 1}, {&zp, 1});
  k::sigmoid({&tiny, 1}, {&zm, 1});
  CHECK(one == 1.0);
  CHECK(tiny > 0.0);
  CHECK(tiny < 1e-15);
}

TEST_CASE("reductions agree with a naive accumulation") {
  Stream s(11, 0);
  auto x = random_vec(s, 1001, -2.0, 2.0);
  auto y = random_vec(s, 1001, -1.0, 3.0);
  double naive = 0.0;
  for (double v : x) naive += v;
  CHECK(k::sum(x) == doctest::Approx(naive).epsilon(1e-12));
  naive = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) naive += x[i] * y[i];
  CHECK(k::dot(x, y) == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("axpy and clamp behave elementwise") {
  std::vector<double> y = {1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> x = {1.0, -1.0, 0.5, 0.0, 2.0};
  k::axpy(y, 2.0, x);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 0.0);
  CHECK(y[4] == 9.0);
  k::clamp(y, 0.5, 4.0);
  CHECK(y[1] == 0.5);
  CHECK(y[4] == 4.0);
  CHECK(y[0] == 3.0);
}

TEST_CASE("scalar and simd backends are bit-identical") {
  if (!k::backend_available(k::Backend::avx2)) {
    MESSAGE("avx2 unavailable; skipping equivalence check");
    return;
  }
  BackendGuard guard;
  Stream s(7, 0);
  // odd lengths exercise the vector tails
  for (std::size_t n : {0UL, 1UL, 3UL, 4UL, 7UL, 64UL, 1001UL, 4096UL, 10007UL}) {
    auto z = random_vec(s, n, -45.0, 45.0);
    auto w = random_vec(s, n, 0.0, 1.0);
    auto a = random_vec(s, n, -3.0, 3.0);
    auto b = random_vec(s, n, -3.0, 3.0);

    k::force_backend(k::Backend::scalar);
    std::vector<double> p_s(n), ax_s = a;
    k::sigmoid(p_s, z);
    k::axpy(ax_s, 1.7, b);
    std::vector<double> cl_s = z;
    k::clamp(cl_s, -1.0, 1.0);
    const double sum_s = k::sum(a);
    const double dot_s = k::dot(a, b);
    const double dot3_s = k::dot3(a, b, w);
    const double sq_s = k::sq_dev_sum(a, 0.25);

    k::force_backend(k::Backend::avx2);
    std::vector<double> p_v(n), ax_v = a;
    k::sigmoid(p_v, z);
    k::axpy(ax_v, 1.7, b);
    std::vector<double> cl_v = z;
    k::clamp(cl_v, -1.0, 1.0);

    for (std::size_t i = 0; i < n; ++i) {
      CHECK(same_bits(p_s[i], p_v[i]));
      CHECK(same_bits(ax_s[i], ax_v[i]));
      CHECK(same_bits(cl_s[i], cl_v[i]));
    }
    CHECK(same_bits(sum_s, k::sum(a)));
    CHECK(same_bits(dot_s, k::dot(a, b)));
    CHECK(same_bits(dot3_s, k::dot3(a, b, w)));
    CHECK(same_bits(sq_s, k::sq_dev_sum(a, 0.25)));
  }
}

TEST_CASE("backend forcing is reversible") {
  const k::Backend before = k::active_backend();
  k::force_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);
  k::force_backend(before);
  CHECK(k::active_backend() == before);
}
