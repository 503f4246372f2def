#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mpfusion/kernels.hpp"
#include "mpfusion/rng.hpp"

using namespace mpfusion;
using kernels::Isa;

namespace {

std::vector<double> random_vector(CounterRng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

class KernelEquivalence : public ::testing::TestWithParam<Isa> {
 protected:
  void SetUp() override {
    if (!kernels::supported(GetParam())) GTEST_SKIP() << "ISA not available on this machine";
  }
};

}  // namespace

TEST_P(KernelEquivalence, DotAndSumSquares) {
  const auto& ref = kernels::table(Isa::scalar);
  const auto& vec = kernels::table(GetParam());
  CounterRng rng(7, 1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 100u, 1023u}) {
    const auto a = random_vector(rng, n);
    const auto b = random_vector(rng, n);
    const double tol = 1e-12 * (1.0 + static_cast<double>(n));
    EXPECT_NEAR(vec.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), tol) << n;
    EXPECT_NEAR(vec.sum_squares(a.data(), n), ref.sum_squares(a.data(), n), tol) << n;
  }
}

TEST_P(KernelEquivalence, ScaleAdd) {
  const auto& ref = kernels::table(Isa::scalar);
  const auto& vec = kernels::table(GetParam());
  CounterRng rng(7, 2);
  for (std::size_t n : {1u, 2u, 5u, 9u, 100u, 257u}) {
    const auto s = random_vector(rng, n);
    const auto z = random_vector(rng, n);
    std::vector<double> r(n), v(n);
    ref.scale_add(r.data(), s.data(), 0.7, z.data(), 1.3, n);
    vec.scale_add(v.data(), s.data(), 0.7, z.data(), 1.3, n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(v[i], r[i], 1e-14);
  }
}

TEST_P(KernelEquivalence, AffineMap) {
  const auto& ref = kernels::table(Isa::scalar);
  const auto& vec = kernels::table(GetParam());
  CounterRng rng(7, 3);
  for (std::size_t rows : {1u, 3u, 5u, 8u})
    for (std::size_t cols : {1u, 2u, 5u, 6u, 13u}) {
      const auto m = random_vector(rng, rows * cols);
      const auto x = random_vector(rng, cols);
      const auto off = random_vector(rng, rows);
      std::vector<double> r(rows), v(rows);
      ref.affine_map(m.data(), rows, cols, x.data(), off.data(), r.data());
      vec.affine_map(m.data(), rows, cols, x.data(), off.data(), v.data());
      for (std::size_t i = 0; i < rows; ++i) EXPECT_NEAR(v[i], r[i], 1e-12);
    }
}

INSTANTIATE_TEST_SUITE_P(AllIsas, KernelEquivalence, ::testing::Values(Isa::scalar, Isa::avx2, Isa::neon),
                         [](const auto& info) { return std::string(kernels::name(info.param)); });

TEST(Kernels, ScalarReferenceValues) {
  const auto& ref = kernels::table(Isa::scalar);
  const double a[] = {1, 2, 3};
  const double b[] = {4, -5, 6};
  EXPECT_EQ(ref.dot(a, b, 3), 12.0);
  EXPECT_EQ(ref.sum_squares(a, 3), 14.0);
  const double m[] = {1, 0, 2, 0, 1, 0};
  const double off[] = {0.5, -1};
  double out[2];
  ref.affine_map(m, 2, 3, a, off, out);
  EXPECT_EQ(out[0], 7.5);
  EXPECT_EQ(out[1], 1.0);
}

TEST(Kernels, SelectAndParse) {
  EXPECT_TRUE(kernels::supported(Isa::scalar));
  EXPECT_EQ(kernels::parse_isa("scalar"), Isa::scalar);
  EXPECT_THROW(kernels::parse_isa("sse9"), std::invalid_argument);
  const Isa before = kernels::active().isa;
  kernels::select(Isa::scalar);
  EXPECT_EQ(kernels::active().isa, Isa::scalar);
  kernels::select(before);
}
