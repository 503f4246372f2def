#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mpfusion/kernels.hpp"

namespace mpfusion::kernels {

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view text) {
  if (text == "scalar") return Isa::scalar;
  if (text == "avx2") return Isa::avx2;
  if (text == "neon") return Isa::neon;
  throw std::invalid_argument("unknown kernel set '" + std::string(text) + "'");
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(MPFUSION_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(MPFUSION_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!supported(isa)) throw std::runtime_error("kernel set '" + std::string(name(isa)) + "' not available");
  switch (isa) {
#if defined(MPFUSION_HAVE_AVX2)
    case Isa::avx2: return detail::kAvx2Table;
#endif
#if defined(MPFUSION_HAVE_NEON)
    case Isa::neon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("MPFUSION_KERNELS"); env != nullptr && *env != '\0')
    return &table(parse_isa(env));
  if (supported(Isa::avx2)) return &table(Isa::avx2);
  if (supported(Isa::neon)) return &table(Isa::neon);
  return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{initial_table()};
  return ptr;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace mpfusion::kernels
