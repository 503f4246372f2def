#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Data-parallel inner loops used by the sensing and fusion hot paths.
//
// Every kernel has a scalar reference implementation; vector variants (AVX2+FMA
// on x86-64, NEON on AArch64) are selected at runtime and are tested against
// the reference. Vector variants reorder the reductions, so results agree with
// the reference to rounding, not bit for bit.

namespace mpfusion::kernels {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  // out[i] = signal_scale * signal[i] + noise_scale * noise[i]
  void (*scale_add)(double* out, const double* signal, double signal_scale, const double* noise, double noise_scale,
                    std::size_t n);
  // out = matrix * x + offset, matrix row-major rows x cols
  void (*affine_map)(const double* matrix, std::size_t rows, std::size_t cols, const double* x, const double* offset,
                     double* out);
};

std::string_view name(Isa isa);
Isa parse_isa(std::string_view text);

bool supported(Isa isa);
const KernelTable& table(Isa isa);

/// Kernels in use. Defaults to the best supported ISA; the MPFUSION_KERNELS
/// environment variable (scalar|avx2|neon) overrides the default.
const KernelTable& active();
void select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}
inline double sum_squares(std::span<const double> a) { return active().sum_squares(a.data(), a.size()); }

namespace detail {
extern const KernelTable kScalarTable;
#if defined(MPFUSION_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(MPFUSION_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace mpfusion::kernels
