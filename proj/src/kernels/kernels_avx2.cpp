#include <immintrin.h>

#include "mpfusion/kernels.hpp"

namespace mpfusion::kernels::detail {

namespace {

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double sum_squares_avx2(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d x0 = _mm256_loadu_pd(a + i);
    const __m256d x1 = _mm256_loadu_pd(a + i + 4);
    acc0 = _mm256_fmadd_pd(x0, x0, acc0);
    acc1 = _mm256_fmadd_pd(x1, x1, acc1);
  }
  if (i + 4 <= n) {
    const __m256d x0 = _mm256_loadu_pd(a + i);
    acc0 = _mm256_fmadd_pd(x0, x0, acc0);
    i += 4;
  }
  double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * a[i];
  return sum;
}

void scale_add_avx2(double* out, const double* signal, double signal_scale, const double* noise, double noise_scale,
                    std::size_t n) {
  const __m256d s = _mm256_set1_pd(signal_scale);
  const __m256d z = _mm256_set1_pd(noise_scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d scaled_noise = _mm256_mul_pd(z, _mm256_loadu_pd(noise + i));
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(s, _mm256_loadu_pd(signal + i), scaled_noise));
  }
  for (; i < n; ++i) out[i] = signal_scale * signal[i] + noise_scale * noise[i];
}

void affine_map_avx2(const double* matrix, std::size_t rows, std::size_t cols, const double* x, const double* offset,
                     double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_avx2(matrix + r * cols, x, cols) + offset[r];
}

}  // namespace

const KernelTable kAvx2Table{Isa::avx2, dot_avx2, sum_squares_avx2, scale_add_avx2, affine_map_avx2};

}  // namespace mpfusion::kernels::detail
