#pragma once

#include <cstddef>
#include <span>

// Numeric inner-loop kernels. Every kernel has a scalar reference
// implementation and, on x86-64 with AVX2+FMA, a vectorized variant selected
// at runtime. The two backends are bit-identical: elementwise kernels mirror
// the exact operation sequence (FMA included), and reductions accumulate into
// four interleaved bins (bin = index mod 4) combined as (b0+b2)+(b1+b3), so a
// result never depends on which backend ran. Inputs must be NaN-free.
namespace equibound::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name(Backend b);
bool backend_available(Backend b);
// Test hook; throws ConfigError if the backend is unavailable.
void force_backend(Backend b);

// y[i] += a * x[i], fused.
void axpy(std::span<double> y, double a, std::span<const double> x);

// p[i] = 1 / (1 + exp(-z[i])). Saturates for |z| >= 40 (sigma(40) rounds to
// 1.0 in double anyway). Max error vs. the true sigmoid is ~1 ulp.
void sigmoid(std::span<double> p, std::span<const double> z);

void clamp(std::span<double> x, double lo, double hi);
void fill(std::span<double> x, double v);

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
// sum_i x[i] * y[i] * w[i]
double dot3(std::span<const double> x, std::span<const double> y,
            std::span<const double> w);
// sum_i (x[i] - center)^2
double sq_dev_sum(std::span<const double> x, double center);

inline double mean(std::span<const double> x) {
  return x.empty() ? 0.0 : sum(x) / static_cast<double>(x.size());
}

}  // namespace equibound::kernels
