#include "equibound/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "equibound/errors.hpp"
#include "kernels/backend.hpp"
#include "kernels/detail_scalar.hpp"

namespace equibound::kernels {

namespace {

const Vtable kScalarVtable = {
    [](double* y, double a, const double* x, std::size_t n) { detail::axpy(y, a, x, n); },
    [](double* p, const double* z, std::size_t n) { detail::sigmoid(p, z, n); },
    [](double* x, double lo, double hi, std::size_t n) { detail::clamp(x, lo, hi, n); },
    [](double* x, double v, std::size_t n) { detail::fill(x, v, n); },
    [](const double* x, std::size_t n) { return detail::sum(x, n); },
    [](const double* x, const double* y, std::size_t n) { return detail::dot(x, y, n); },
    [](const double* x, const double* y, const double* w, std::size_t n) {
      return detail::dot3(x, y, w, n);
    },
    [](const double* x, double c, std::size_t n) { return detail::sq_dev_sum(x, c, n); },
};

bool avx2_available() {
#ifdef EQUIBOUND_HAVE_AVX2
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend pick_default() {
  if (const char* env = std::getenv("EQUIBOUND_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_available()) return Backend::avx2;
  }
  return avx2_available() ? Backend::avx2 : Backend::scalar;
}

struct State {
  std::atomic<const Vtable*> table;
  std::atomic<Backend> backend;
  State() {
    Backend b = pick_default();
    backend = b;
#ifdef EQUIBOUND_HAVE_AVX2
    table = (b == Backend::avx2) ? &avx2_vtable() : &kScalarVtable;
#else
    table = &kScalarVtable;
#endif
  }
};

State& state() {
  static State s;
  return s;
}

const Vtable& table() { return *state().table.load(std::memory_order_relaxed); }

}  // namespace

Backend active_backend() { return state().backend.load(std::memory_order_relaxed); }

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
  }
  return "?";
}

bool backend_available(Backend b) {
  return b == Backend::scalar || (b == Backend::avx2 && avx2_available());
}

void force_backend(Backend b) {
  if (!backend_available(b))
    throw ConfigError(std::string("kernel backend unavailable: ") + backend_name(b));
  State& s = state();
#ifdef EQUIBOUND_HAVE_AVX2
  s.table.store(b == Backend::avx2 ? &avx2_vtable() : &kScalarVtable);
#else
  s.table.store(&kScalarVtable);
#endif
  s.backend.store(b);
}

void axpy(std::span<double> y, double a, std::span<const double> x) {
  table().axpy(y.data(), a, x.data(), y.size());
}

void sigmoid(std::span<double> p, std::span<const double> z) {
  table().sigmoid(p.data(), z.data(), p.size());
}

void clamp(std::span<double> x, double lo, double hi) {
  table().clamp(x.data(), lo, hi, x.size());
}

void fill(std::span<double> x, double v) { table().fill(x.data(), v, x.size()); }

double sum(std::span<const double> x) { return table().sum(x.data(), x.size()); }

double dot(std::span<const double> x, std::span<const double> y) {
  return table().dot(x.data(), y.data(), x.size());
}

double dot3(std::span<const double> x, std::span<const double> y,
            std::span<const double> w) {
  return table().dot3(x.data(), y.data(), w.data(), x.size());
}

double sq_dev_sum(std::span<const double> x, double center) {
  return table().sq_dev_sum(x.data(), center, x.size());
}

}  // namespace equibound::kernels
