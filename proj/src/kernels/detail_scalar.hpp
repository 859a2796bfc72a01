#pragma once

#include <cmath>
#include <cstddef>

// Scalar reference kernels. The AVX2 backend mirrors these operation for
// operation (including FMA placement and the 4-bin reduction layout) so both
// backends produce identical bits. Tails of vectorized loops call straight
// into these.
namespace equibound::kernels::detail {

inline constexpr double kLog2E = 1.4426950408889634073599;
// ln(2) split high/low (Cephes) for exact range reduction.
inline constexpr double kLn2Hi = 6.93145751953125e-1;
inline constexpr double kLn2Lo = 1.42860682030941723212e-6;

inline constexpr double kExpP0 = 1.26177193074810590878e-4;
inline constexpr double kExpP1 = 3.02994407707441961300e-2;
inline constexpr double kExpP2 = 9.99999999999999999910e-1;
inline constexpr double kExpQ0 = 3.00198505138664455042e-6;
inline constexpr double kExpQ1 = 2.52448340349684104192e-3;
inline constexpr double kExpQ2 = 2.27265548208155028766e-1;
inline constexpr double kExpQ3 = 2.00000000000000000005e0;

inline constexpr double kSigmoidSat = 40.0;

// exp(x) for x in [-kSigmoidSat, 0] via Cephes-style Pade approximation.
inline double exp_unit(double x) {
  double pxf = std::floor(kLog2E * x + 0.5);
  int n = static_cast<int>(pxf);
  x = std::fma(-pxf, kLn2Hi, x);
  x = std::fma(-pxf, kLn2Lo, x);
  double xx = x * x;
  double p = x * std::fma(std::fma(kExpP0, xx, kExpP1), xx, kExpP2);
  double q = std::fma(std::fma(std::fma(kExpQ0, xx, kExpQ1), xx, kExpQ2), xx, kExpQ3);
  double e = 1.0 + 2.0 * (p / (q - p));
  return std::ldexp(e, n);
}

inline double sigmoid_unit(double z) {
  double az = std::fabs(z);
  if (az > kSigmoidSat) az = kSigmoidSat;
  double e = exp_unit(-az);
  double num = (z >= 0.0) ? 1.0 : e;
  return num / (1.0 + e);
}

inline void axpy(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

inline void sigmoid(double* p, const double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) p[i] = sigmoid_unit(z[i]);
}

inline void clamp(double* x, double lo, double hi, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    v = (v < lo) ? lo : v;
    v = (v > hi) ? hi : v;
    x[i] = v;
  }
}

inline void fill(double* x, double v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = v;
}

inline double combine4(const double acc[4]) {
  return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

inline double sum(const double* x, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] += x[i];
  return combine4(acc);
}

inline double dot(const double* x, const double* y, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] = std::fma(x[i], y[i], acc[i & 3]);
  return combine4(acc);
}

inline double dot3(const double* x, const double* y, const double* w, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] = std::fma(x[i] * y[i], w[i], acc[i & 3]);
  return combine4(acc);
}

inline double sq_dev_sum(const double* x, double center, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    double d = x[i] - center;
    acc[i & 3] = std::fma(d, d, acc[i & 3]);
  }
  return combine4(acc);
}

}  // namespace equibound::kernels::detail
