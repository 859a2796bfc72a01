// AVX2+FMA backend. Mirrors detail_scalar.hpp operation for operation; tails
// fall through to the scalar reference so results are bit-identical.
#ifdef EQUIBOUND_HAVE_AVX2

#include <immintrin.h>

#include <cstddef>

#include "kernels/backend.hpp"
#include "kernels/detail_scalar.hpp"

namespace equibound::kernels {

namespace {

namespace d = detail;

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

// exp(x) for x in [-40, 0]; same Cephes reduction/rational as the scalar path.
inline __m256d exp_unit4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(d::kLog2E);
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d pxf = _mm256_floor_pd(_mm256_add_pd(_mm256_mul_pd(log2e, x), half));
  x = _mm256_fmadd_pd(_mm256_sub_pd(_mm256_setzero_pd(), pxf),
                      _mm256_set1_pd(d::kLn2Hi), x);
  x = _mm256_fmadd_pd(_mm256_sub_pd(_mm256_setzero_pd(), pxf),
                      _mm256_set1_pd(d::kLn2Lo), x);
  __m256d xx = _mm256_mul_pd(x, x);
  __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(d::kExpP0), xx, _mm256_set1_pd(d::kExpP1));
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(d::kExpP2));
  p = _mm256_mul_pd(x, p);
  __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(d::kExpQ0), xx, _mm256_set1_pd(d::kExpQ1));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(d::kExpQ2));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(d::kExpQ3));
  __m256d e = _mm256_add_pd(
      _mm256_set1_pd(1.0),
      _mm256_mul_pd(_mm256_set1_pd(2.0), _mm256_div_pd(p, _mm256_sub_pd(q, p))));
  // 2^n with n = pxf in [-58, 0]; exact scale, matches ldexp.
  __m128i n32 = _mm256_cvtpd_epi32(pxf);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
}

void axpy_avx2(double* y, double a, const double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  d::axpy(y + i, a, x + i, n - i);
}

void sigmoid_avx2(double* p, const double* z, std::size_t n) {
  const __m256d sat = _mm256_set1_pd(d::kSigmoidSat);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d zv = _mm256_loadu_pd(z + i);
    __m256d az = _mm256_min_pd(abs_pd(zv), sat);
    __m256d e = exp_unit4(_mm256_sub_pd(_mm256_setzero_pd(), az));
    __m256d nonneg = _mm256_cmp_pd(zv, _mm256_setzero_pd(), _CMP_GE_OQ);
    __m256d num = _mm256_blendv_pd(e, one, nonneg);
    _mm256_storeu_pd(p + i, _mm256_div_pd(num, _mm256_add_pd(one, e)));
  }
  d::sigmoid(p + i, z + i, n - i);
}

void clamp_avx2(double* x, double lo, double hi, std::size_t n) {
  const __m256d lov = _mm256_set1_pd(lo);
  const __m256d hiv = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    v = _mm256_min_pd(_mm256_max_pd(v, lov), hiv);
    _mm256_storeu_pd(x + i, v);
  }
  d::clamp(x + i, lo, hi, n - i);
}

void fill_avx2(double* x, double v, std::size_t n) {
  const __m256d vv = _mm256_set1_pd(v);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, vv);
  d::fill(x + i, v, n - i);
}

// Reductions keep one bin per lane; the tail reuses the same bins, so the
// accumulation pattern is identical to the scalar reference.
inline double finish4(__m256d acc, const double* x, const double* y,
                      const double* w, std::size_t i, std::size_t n, int kind,
                      double center) {
  alignas(32) double bins[4];
  _mm256_store_pd(bins, acc);
  for (; i < n; ++i) {
    switch (kind) {
      case 0: bins[i & 3] += x[i]; break;
      case 1: bins[i & 3] = __builtin_fma(x[i], y[i], bins[i & 3]); break;
      case 2: bins[i & 3] = __builtin_fma(x[i] * y[i], w[i], bins[i & 3]); break;
      case 3: {
        double dv = x[i] - center;
        bins[i & 3] = __builtin_fma(dv, dv, bins[i & 3]);
        break;
      }
    }
  }
  return d::combine4(bins);
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  return finish4(acc, x, nullptr, nullptr, i, n, 0, 0.0);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  return finish4(acc, x, y, nullptr, i, n, 1, 0.0);
}

double dot3_avx2(const double* x, const double* y, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xy = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(xy, _mm256_loadu_pd(w + i), acc);
  }
  return finish4(acc, x, y, w, i, n, 2, 0.0);
}

double sq_dev_sum_avx2(const double* x, double center, std::size_t n) {
  const __m256d cv = _mm256_set1_pd(center);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d dv = _mm256_sub_pd(_mm256_loadu_pd(x + i), cv);
    acc = _mm256_fmadd_pd(dv, dv, acc);
  }
  return finish4(acc, x, nullptr, nullptr, i, n, 3, center);
}

}  // namespace

const Vtable& avx2_vtable() {
  static const Vtable t = {axpy_avx2, sigmoid_avx2, clamp_avx2, fill_avx2,
                           sum_avx2,  dot_avx2,     dot3_avx2,  sq_dev_sum_avx2};
  return t;
}

}  // namespace equibound::kernels

#endif  // EQUIBOUND_HAVE_AVX2
