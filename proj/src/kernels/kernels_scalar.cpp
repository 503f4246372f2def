#include "mpfusion/kernels.hpp"

namespace mpfusion::kernels::detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double sum_squares_scalar(const double* a, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * a[i];
  return sum;
}

void scale_add_scalar(double* out, const double* signal, double signal_scale, const double* noise,
                      double noise_scale, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = signal_scale * signal[i] + noise_scale * noise[i];
}

void affine_map_scalar(const double* matrix, std::size_t rows, std::size_t cols, const double* x,
                       const double* offset, double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_scalar(matrix + r * cols, x, cols) + offset[r];
}

}  // namespace

const KernelTable kScalarTable{Isa::scalar, dot_scalar, sum_squares_scalar, scale_add_scalar, affine_map_scalar};

}  // namespace mpfusion::kernels::detail
