#include <arm_neon.h>

#include "mpfusion/kernels.hpp"

namespace mpfusion::kernels::detail {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double sum_squares_neon(const double* a, std::size_t n) { return dot_neon(a, a, n); }

void scale_add_neon(double* out, const double* signal, double signal_scale, const double* noise, double noise_scale,
                    std::size_t n) {
  const float64x2_t s = vdupq_n_f64(signal_scale);
  const float64x2_t z = vdupq_n_f64(noise_scale);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vfmaq_f64(vmulq_f64(z, vld1q_f64(noise + i)), s, vld1q_f64(signal + i)));
  for (; i < n; ++i) out[i] = signal_scale * signal[i] + noise_scale * noise[i];
}

void affine_map_neon(const double* matrix, std::size_t rows, std::size_t cols, const double* x, const double* offset,
                     double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_neon(matrix + r * cols, x, cols) + offset[r];
}

}  // namespace

const KernelTable kNeonTable{Isa::neon, dot_neon, sum_squares_neon, scale_add_neon, affine_map_neon};

}  // namespace mpfusion::kernels::detail
