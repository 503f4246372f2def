#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "mpfusion/engine_discrete.hpp"
#include "mpfusion/rng.hpp"

using namespace mpfusion;

namespace {

// Independent evaluation of S: the logarithmic form in extended precision for
// large results, the hyperbolic form 2 atanh(tanh(a/2) tanh(b/2)) for small ones.
long double s_oracle(long double a, long double b) {
  const long double direct = std::log((1.0L + std::exp(a + b)) / (std::exp(a) + std::exp(b)));
  if (std::fabs(direct) > 0.1L) return direct;
  return 2.0L * std::atanh(std::tanh(a / 2) * std::tanh(b / 2));
}

// Message x_k -> x_j on one edge by enumerating x_k, with phi(x) = e^{gamma x / 2}
// and psi = e^{e x_k x_j}. `use_max` swaps the sum for a max.
double edge_message(double gamma, double exponent, bool use_max) {
  auto m = [&](int xj) {
    const double t1 = gamma / 2 + exponent * xj;
    const double t2 = -gamma / 2 - exponent * xj;
    return use_max ? std::max(t1, t2) : std::log(std::exp(t1) + std::exp(t2));
  };
  return m(1) - m(-1);
}

// Exact posterior LLR (or max-marginal difference) of every node by
// enumerating all 2^N configurations of the pairwise model.
std::vector<double> enumerate_marginals(const Topology& g, const std::vector<double>& exponents,
                                        const std::vector<double>& gamma, bool use_max) {
  const int n = g.node_count();
  std::vector<double> best(2 * n, -std::numeric_limits<double>::infinity());
  std::vector<double> sum(2 * n, 0.0);
  for (int mask = 0; mask < (1 << n); ++mask) {
    auto x = [&](int i) { return (mask >> i) & 1 ? 1 : -1; };
    double score = 0.0;
    for (int i = 0; i < n; ++i) score += gamma[i] * x(i) / 2;
    for (std::size_t e = 0; e < g.edges().size(); ++e) score += exponents[e] * x(g.edges()[e].a) * x(g.edges()[e].b);
    for (int i = 0; i < n; ++i) {
      const int slot = 2 * i + (x(i) > 0);
      best[slot] = std::max(best[slot], score);
      sum[slot] += std::exp(score);
    }
  }
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = use_max ? best[2 * i + 1] - best[2 * i] : std::log(sum[2 * i + 1]) - std::log(sum[2 * i]);
  return out;
}

// Straightforward recursive message evaluator: message k -> j at depth l.
double recursive_message(const Topology& g, const std::vector<double>& jeff, const std::vector<double>& gamma,
                         Algorithm alg, int k, int j, int l) {
  if (l == 0) return 0.0;
  double in = gamma[k];
  for (int n : g.neighbors_except(k, j)) in += recursive_message(g, jeff, gamma, alg, n, k, l - 1);
  const double coupling = jeff[*g.edge_index(k, j)];
  return edge_message(in, coupling / 2, alg == Algorithm::max_product);
}

std::vector<double> recursive_lambda(const Topology& g, const std::vector<double>& jeff,
                                     const std::vector<double>& gamma, Algorithm alg, int l) {
  std::vector<double> out(gamma);
  for (int j = 0; j < g.node_count(); ++j)
    for (int k : g.neighbors(j)) out[j] += recursive_message(g, jeff, gamma, alg, k, j, l);
  return out;
}

MessageState iterate(Algorithm alg, const Topology& g, const MrfParams& p, const std::vector<double>& gamma, int l,
                     CouplingConvention conv) {
  auto state = MessageState::zero(g, alg);
  for (int i = 0; i < l; ++i)
    state = alg == Algorithm::max_product ? maxprod_step_discrete(state, g, p, gamma, conv)
                                          : sumprod_step(state, g, p, gamma, conv);
  return state;
}

}  // namespace

TEST(STransfer, ZerosAndSymmetry) {
  for (double a : {-40.0, -3.0, 0.0, 0.7, 25.0}) {
    EXPECT_EQ(s_transfer(a, 0.0), 0.0);
    EXPECT_EQ(s_transfer(0.0, a), 0.0);
    for (double b : {-5.0, 0.01, 2.0, 49.0}) EXPECT_EQ(s_transfer(a, b), s_transfer(b, a));
  }
}

TEST(STransfer, MatchesExtendedPrecisionOracle) {
  double worst = 0.0;
  for (double a = -50.0; a <= 50.0; a += 0.731)
    for (double b = -50.0; b <= 50.0; b += 0.613) {
      const double got = s_transfer(a, b);
      const double want = static_cast<double>(s_oracle(a, b));
      worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
    }
  EXPECT_LT(worst, 1e-12);
}

TEST(Coefficient, ClosedFormAndDerivative) {
  EXPECT_EQ(coefficient_from_coupling(0.0), 0.0);
  EXPECT_NEAR(coefficient_from_coupling(80.0), 1.0, 1e-15);
  for (double j : {-3.0, -0.4, 0.1, 0.5, 1.0, 2.5}) {
    const double closed = (std::exp(2 * j) - 1) / std::pow(1 + std::exp(j), 2);
    EXPECT_NEAR(coefficient_from_coupling(j), closed, 1e-12);
    const double h = 1e-5;
    const double derivative = (s_transfer(j, h) - s_transfer(j, -h)) / (2 * h);
    EXPECT_NEAR(coefficient_from_coupling(j), derivative, 1e-6);
  }
}

TEST(SingleEdge, SumProductMatchesMarginalization) {
  const Topology g(2, {{0, 1}});
  for (auto conv : {CouplingConvention::merged, CouplingConvention::raw})
    for (double j = -2.0; j <= 2.0; j += 0.21)
      for (double gamma = -6.0; gamma <= 6.0; gamma += 0.63) {
        const MrfParams p(g, {j});
        const std::vector<double> gam{gamma, 0.0};
        const auto s = sumprod_step(MessageState::zero(g, Algorithm::sum_product), g, p, gam, conv);
        const double want = edge_message(gamma, pairwise_exponent(j, conv), false);
        EXPECT_NEAR(s.delta[g.arc_index(0, 1)], want, 1e-12);
        const double jeff = effective_coupling(j, conv);
        EXPECT_NEAR(want, std::log((std::exp(gamma + jeff) + 1) / (std::exp(gamma) + std::exp(jeff))), 1e-12);
      }
}

TEST(SingleEdge, SumProductLargeEvidenceLimit) {
  const Topology g(2, {{0, 1}});
  const MrfParams p(g, {0.8});
  const auto s = sumprod_step(MessageState::zero(g, Algorithm::sum_product), g, p, std::vector<double>{60.0, 0.0},
                              CouplingConvention::merged);
  EXPECT_NEAR(s.delta[g.arc_index(0, 1)], 0.8, 1e-12);
}

TEST(SingleEdge, MaxProductClampLaw) {
  const Topology g(2, {{0, 1}});
  for (auto conv : {CouplingConvention::merged, CouplingConvention::raw})
    for (int a = 0; a < 20; ++a)
      for (int b = 0; b < 20; ++b) {
        const double j = -3.0 + 6.0 * a / 19.0;
        const double gamma = -8.0 + 16.0 * b / 19.0;
        const MrfParams p(g, {j});
        const std::vector<double> gam{gamma, 0.0};
        const auto s = maxprod_step_discrete(MessageState::zero(g, Algorithm::max_product), g, p, gam, conv);
        const double got = s.delta[g.arc_index(0, 1)];
        const double swing = std::abs(effective_coupling(j, conv));
        const double clamp = std::min(std::max(gamma, -swing), swing) * (j < 0 ? -1.0 : 1.0);
        EXPECT_NEAR(got, clamp, 1e-12);
        // Replacing the sum in the sum-product message by a max gives the max-product message.
        EXPECT_EQ(got, edge_message(gamma, pairwise_exponent(j, conv), true));
      }
}

TEST(SingleEdge, MaxProductDegenerateCases) {
  const Topology g(2, {{0, 1}});
  auto one = [&](double j, double gamma) {
    return maxprod_step_discrete(MessageState::zero(g, Algorithm::max_product), g, MrfParams(g, {j}),
                                 std::vector<double>{gamma, 0.0})
        .delta[0];
  };
  EXPECT_EQ(one(0.0, 3.0), 0.0);
  EXPECT_EQ(one(1.5, 0.0), 0.0);
}

TEST(Engines, ZeroCouplingNeutrality) {
  const auto g = Topology::chain(5);
  const auto p = MrfParams::uniform(g, 0.0);
  const std::vector<double> gamma{1.0, -2.0, 0.3, 4.0, -0.5};
  for (auto alg : {Algorithm::max_product, Algorithm::sum_product, Algorithm::linearized}) {
    const auto engine = FloodingEngine::discrete(g, p, alg, CouplingConvention::merged);
    for (int l = 0; l <= 5; ++l) EXPECT_EQ(engine.decision_variables(gamma, l), gamma);
  }
  auto state = MessageState::zero(g, Algorithm::linearized);
  state = linear_step(state, g, std::vector<double>(g.arcs().size(), 0.0), gamma);
  for (double d : state.delta) EXPECT_EQ(d, 0.0);
}

TEST(Engines, LinearChainUnrolled) {
  const auto g = Topology::chain(3);
  const double c = 0.37;
  const std::vector<double> gamma{1.3, -0.4, 2.2};
  auto state = MessageState::zero(g, Algorithm::linearized);
  const std::vector<double> coeff(g.arcs().size(), c);
  state = linear_step(state, g, coeff, gamma);
  state = linear_step(state, g, coeff, gamma);
  EXPECT_EQ(state.iteration, 2);
  const auto lambda = decision_variables(state, g, gamma);
  EXPECT_NEAR(lambda[2], gamma[2] + c * gamma[1] + c * c * gamma[0], 1e-14);
  EXPECT_NEAR(lambda[0], gamma[0] + c * gamma[1] + c * c * gamma[2], 1e-14);
}

TEST(Engines, LinearizationFirstOrder) {
  for (double j : {0.1, 0.5, 1.0}) {
    const double c = coefficient_from_coupling(j);
    double previous = 1.0;
    for (double b : {1e-1, 1e-2, 1e-3}) {
      const double rel = std::abs(s_transfer(j, b) - c * b) / b;
      EXPECT_LT(rel, previous);
      previous = rel;
    }
    EXPECT_LT(previous, 1e-4);
  }
}

TEST(Engines, MatchRecursiveEvaluator) {
  CounterRng rng(21, 0);
  const auto g = Topology::chain(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> j(4), gamma(5);
    for (double& v : j) v = 3.0 * (rng.uniform() - 0.3);
    for (double& v : gamma) v = 4.0 * rng.normal();
    const MrfParams p(g, j);
    for (auto conv : {CouplingConvention::merged, CouplingConvention::raw}) {
      const auto jeff = [&] {
        std::vector<double> out;
        for (double v : j) out.push_back(effective_coupling(v, conv));
        return out;
      }();
      for (auto alg : {Algorithm::max_product, Algorithm::sum_product})
        for (int l = 0; l <= 4; ++l) {
          const auto got = decision_variables(iterate(alg, g, p, gamma, l, conv), g, gamma);
          const auto want = recursive_lambda(g, jeff, gamma, alg, l);
          for (int n = 0; n < 5; ++n) EXPECT_NEAR(got[n], want[n], 1e-12);
        }
    }
  }
}

TEST(Engines, TreeFixedPointIsExact) {
  CounterRng rng(22, 0);
  for (const auto& g : {Topology::chain(5), Topology::star(4), Topology(6, {{0, 1}, {1, 2}, {1, 3}, {3, 4}, {3, 5}})}) {
    const int n = g.node_count();
    std::vector<double> j(g.edges().size()), gamma(n);
    for (double& v : j) v = 2.0 * rng.normal();
    for (double& v : gamma) v = 3.0 * rng.normal();
    const MrfParams p(g, j);
    std::vector<double> exponents;
    for (double v : j) exponents.push_back(pairwise_exponent(v, CouplingConvention::merged));
    for (auto alg : {Algorithm::max_product, Algorithm::sum_product}) {
      const auto got =
          FloodingEngine::discrete(g, p, alg, CouplingConvention::merged).decision_variables(gamma, n - 1);
      const auto want = enumerate_marginals(g, exponents, gamma, alg == Algorithm::max_product);
      for (int i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
    }
  }
}

TEST(Engines, FloodingIsDeterministic) {
  const auto g = Topology::star(4);
  const MrfParams p(g, {0.3, -1.2, 2.0, 0.7});
  const std::vector<double> gamma{0.2, -1.0, 3.0, 0.5, -2.5};
  const auto a = iterate(Algorithm::sum_product, g, p, gamma, 6, CouplingConvention::merged);
  const auto b = iterate(Algorithm::sum_product, g, p, gamma, 6, CouplingConvention::merged);
  EXPECT_EQ(a.delta, b.delta);
  EXPECT_THROW(maxprod_step_discrete(a, g, p, gamma), std::invalid_argument);
}

TEST(Engines, ZeroIterationsGiveLocalLlr) {
  const auto g = Topology::chain(4);
  const std::vector<double> gamma{1, 2, 3, 4};
  const auto state = MessageState::zero(g, Algorithm::max_product);
  EXPECT_EQ(decision_variables(state, g, gamma), gamma);
}

TEST(Decide, StrictInequality) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> lambda{1.0, std::nextafter(1.0, 2.0), -1e300};
  const std::vector<double> tau{1.0, 1.0, -inf};
  EXPECT_EQ(decide(lambda, tau), (std::vector<int>{-1, 1, 1}));
}

TEST(LogSumExp, Gaps) {
  const auto two = logsumexp_max_gap(std::vector<double>{3.5, 3.5});
  EXPECT_NEAR(two.gap, std::log(2.0), 1e-15);
  EXPECT_LE(logsumexp_max_gap(std::vector<double>{3.5, -96.5}).gap, 1e-9);
  const auto seven = logsumexp_max_gap(std::vector<double>(7, -2.0));
  EXPECT_NEAR(seven.gap, std::log(7.0), 1e-14);
  EXPECT_EQ(seven.approx, -2.0);
  EXPECT_THROW(logsumexp_max_gap(std::vector<double>{}), std::invalid_argument);
}
