#pragma once

#include <cstddef>

namespace equibound::kernels {

struct Vtable {
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  void (*sigmoid)(double* p, const double* z, std::size_t n);
  void (*clamp)(double* x, double lo, double hi, std::size_t n);
  void (*fill)(double* x, double v, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*dot3)(const double* x, const double* y, const double* w, std::size_t n);
  double (*sq_dev_sum)(const double* x, double center, std::size_t n);
};

#ifdef EQUIBOUND_HAVE_AVX2
const Vtable& avx2_vtable();
#endif

}  // namespace equibound::kernels
