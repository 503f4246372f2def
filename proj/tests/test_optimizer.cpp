#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mpfusion/optimizer.hpp"
#include "mpfusion/scenario.hpp"
#include "mpfusion/signal.hpp"

using namespace mpfusion;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

StateMixture matched_mixture(const Topology& g, const std::vector<double>& couplings, const std::vector<double>& e) {
  const auto prior = joint_prior(MrfParams(g, couplings), g);
  std::vector<std::array<double, 2>> mean, var;
  for (double x : e) {
    mean.push_back({-x / 2, x / 2});
    var.push_back({x, x});
  }
  return mixture_from_prior(prior, mean, var);
}

// Pd of gamma_j + sum c_k gamma_k with Pf pinned at alpha, straight from the definitions.
double pd_at(const LocalMoments& m, const std::vector<double>& c, double alpha) {
  std::vector<double> w{1.0};
  w.insert(w.end(), c.begin(), c.end());
  const auto stats = project(m, w, 0.0);
  return gfun(solve_threshold(stats, -1, alpha), 1, stats);
}

double pd_of_matrix(const Eigen::MatrixXd& w, const StateMixture& mixture, const Topology& g, int j, double alpha) {
  const auto stats = conditional_stats_from_weights(w, Eigen::VectorXd::Zero(g.node_count()), mixture, g, j,
                                                    StatsMode::full);
  return gfun(solve_threshold(stats, -1, alpha), 1, stats);
}

}  // namespace

TEST(LearnCouplings, Extremes) {
  const auto g = Topology::chain(3);
  const std::vector<std::vector<int>> agree(10, {1, 1, 1});
  const std::vector<std::vector<int>> disagree(10, {1, -1, 1});
  for (double j : learn_couplings(g, agree, 0.3).couplings) EXPECT_DOUBLE_EQ(j, 0.3);
  for (double j : learn_couplings(g, disagree, 0.3).couplings) EXPECT_DOUBLE_EQ(j, -0.3);
  EXPECT_THROW(learn_couplings(g, std::vector<std::vector<int>>{}, 0.3), std::invalid_argument);
}

TEST(LearnCouplings, IndependentHistoryConcentrates) {
  const auto g = Topology(2, {{0, 1}});
  const double zeta = 1.0;
  const int window = 2500, reps = 400;
  CounterRng rng(41, 0);
  int inside = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<std::vector<int>> h(window, std::vector<int>(2));
    for (auto& x : h)
      for (int& v : x) v = rng.uniform() < 0.5 ? 1 : -1;
    const double j = learn_couplings(g, h, zeta).couplings[0];
    EXPECT_LE(std::abs(j), zeta);
    inside += std::abs(j) <= 3 * zeta / std::sqrt(window);
  }
  EXPECT_GE(inside, 0.99 * reps);
}

TEST(ContractionBound, Values) {
  EXPECT_DOUBLE_EQ(contraction_bound(Topology::chain(5)), 1.0);
  EXPECT_DOUBLE_EQ(contraction_bound(Topology::star(4)), 1.0 / 3.0);
  EXPECT_EQ(contraction_bound(Topology(2, {{0, 1}})), kInf);
}

TEST(OptimizeP2, BoundaryOptimumForCorrelatedTwin) {
  const auto g = Topology::star(3);
  const auto mixture = matched_mixture(g, {3.0, 0.0, 0.0}, {4, 4, 4, 4});
  const auto m = local_moments(mixture, g, 1, StatsMode::neighbors);
  const double bound = contraction_bound(g);
  const auto s = optimize_p2(m, 0.1, bound);
  ASSERT_EQ(s.coefficients.size(), 1u);
  EXPECT_LT(s.coefficients[0], bound);

  // Same feasible set as the solver: strictly inside the contraction bound.
  const double limit = bound * (1.0 - 1e-6);
  double grid_best = -1.0, grid_arg = 0.0;
  for (int i = -5000; i <= 5000; ++i) {
    const double c = limit * i / 5000.0;
    const double pd = pd_at(m, {c}, 0.1);
    if (pd > grid_best) {
      grid_best = pd;
      grid_arg = c;
    }
  }
  EXPECT_GT(grid_arg, bound - 2e-4);
  EXPECT_GT(s.coefficients[0], bound - 1e-3);
  EXPECT_GE(s.pd, grid_best - 1e-9);
}

TEST(OptimizeP2, IndependentNeighborIsIgnored) {
  const auto g = Topology(2, {{0, 1}});
  const auto mixture = matched_mixture(g, {0.0}, {5, 3});
  const auto m = local_moments(mixture, g, 0, StatsMode::neighbors);
  const auto s = optimize_p2(m, 0.1, contraction_bound(g));
  EXPECT_NEAR(s.pd, pd_at(m, {0.0}, 0.1), 1e-6);
  EXPECT_NEAR(s.coefficients[0], 0.0, 1e-3);
}

TEST(OptimizeP2, HalfFalseAlarmSingleNode) {
  const auto g = Topology(1, {});
  const double e = 3.0;
  const auto mixture = matched_mixture(g, {}, {e});
  const auto m = local_moments(mixture, g, 0, StatsMode::neighbors);
  const auto s = optimize_p2(m, 0.5, kInf);
  EXPECT_TRUE(s.coefficients.empty());
  EXPECT_NEAR(s.threshold, -e / 2, 1e-9);
  EXPECT_NEAR(s.pd, q_function((-e / 2 - e / 2) / std::sqrt(e)), 1e-9);
  EXPECT_THROW(optimize_p2(m, 1.0, kInf), std::domain_error);
}

TEST(OptimizeP2, NeverWorseThanGridOrLocal) {
  const auto config = ScenarioConfig::benchmark();
  const auto mixture = world_mixture(config);
  const auto& g = config.topology;
  const double bound = contraction_bound(g);
  for (int j = 0; j < g.node_count(); ++j) {
    const auto m = local_moments(mixture, g, j, StatsMode::neighbors);
    const auto s = optimize_p2(m, 0.1, bound);
    for (double c : s.coefficients) EXPECT_LT(std::abs(c), bound);
    EXPECT_GE(s.pd, pd_at(m, std::vector<double>(s.coefficients.size(), 0.0), 0.1));
    const int d = static_cast<int>(s.coefficients.size());
    const double lim = bound * (1 - 1e-6);
    for (int a = 0; a < 11; ++a)
      for (int b = 0; b < (d > 1 ? 11 : 1); ++b) {
        std::vector<double> c{-lim + 2 * lim * a / 10};
        if (d > 1) c.push_back(-lim + 2 * lim * b / 10);
        EXPECT_GE(s.pd, pd_at(m, c, 0.1) - 1e-12);
      }
    EXPECT_NEAR(s.pf, 0.1, 1e-12);
    EXPECT_FALSE(s.trace.empty());
  }
}

TEST(OptimizeP2, MonotoneProblemGivesNonnegativeCoefficients) {
  const auto g = Topology::chain(5);
  const auto mixture = matched_mixture(g, {0.8, 0.5, 1.1, 0.3}, {3, 3, 3, 3, 3});
  for (int j = 0; j < 5; ++j) {
    const auto s = optimize_p2(local_moments(mixture, g, j, StatsMode::neighbors), 0.1, contraction_bound(g));
    for (double c : s.coefficients) EXPECT_GE(c, 0.0) << j;
  }
}

TEST(ArcCoefficients, Placement) {
  const auto g = Topology::chain(3);
  P2Solution s;
  s.node = 1;
  s.neighbors = {0, 2};
  s.coefficients = {0.2, 0.7};
  const std::vector<P2Solution> list{s};
  const auto arcs = arc_coefficients(g, list);
  EXPECT_EQ(arcs[g.arc_index(0, 1)], 0.2);
  EXPECT_EQ(arcs[g.arc_index(2, 1)], 0.7);
  EXPECT_EQ(arcs[g.arc_index(1, 0)], 0.0);
}

TEST(OptimizeP1, BeatsEgcAndIdentityWhenSlack) {
  auto config = ScenarioConfig::benchmark();
  config.rho_db = -8.0;
  const auto mixture = world_mixture(config);
  const auto& g = config.topology;
  P1Options options;
  const auto sol = optimize_p1(mixture, g, options);
  EXPECT_TRUE(sol.feasible);

  double identity = 0.0;
  std::vector<double> egc(3, 0.0);
  const std::vector<double> c0{0.1, 0.3, 1.0};
  for (int j = 0; j < 5; ++j) {
    identity += pd_of_matrix(Eigen::MatrixXd::Identity(5, 5), mixture, g, j, 0.1);
    for (std::size_t c = 0; c < c0.size(); ++c) {
      Eigen::MatrixXd w = Eigen::MatrixXd::Identity(5, 5);
      for (const auto& e : g.edges()) w(e.a, e.b) = w(e.b, e.a) = c0[c];
      egc[c] += pd_of_matrix(w, mixture, g, j, 0.1);
    }
  }
  EXPECT_GE(sol.reward, identity);
  for (double v : egc) EXPECT_GE(sol.reward, v);
  for (int j = 0; j < 5; ++j) EXPECT_EQ(sol.weights(j, j), 1.0);
}

TEST(OptimizeP1, InfeasibleDetectionTarget) {
  auto config = ScenarioConfig::benchmark();
  config.rho_db = -10.0;
  P1Options options;
  options.beta = 0.999;
  const auto sol = optimize_p1(world_mixture(config), config.topology, options);
  EXPECT_FALSE(sol.feasible);
  bool short_of_target = false;
  for (double pd : sol.pd) short_of_target |= pd < 0.999;
  EXPECT_TRUE(short_of_target);
}

TEST(OptimizeP1, SingleNodeReducesToThreshold) {
  const auto g = Topology(1, {});
  const auto mixture = matched_mixture(g, {}, {2.0});
  P1Options options;
  options.alpha = 0.05;
  const auto sol = optimize_p1(mixture, g, options);
  const auto stats =
      conditional_stats_from_weights(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), mixture, g, 0,
                                     StatsMode::full);
  EXPECT_NEAR(sol.thresholds[0], solve_threshold(stats, -1, 0.05), 1e-12);
  EXPECT_NEAR(sol.pf[0], 0.05, 1e-12);
}

TEST(OptimizeP1, BudgetScalesFalseAlarmTargets) {
  auto config = ScenarioConfig::benchmark();
  P1Options options;
  options.cost_budget = 0.25;
  const auto sol = optimize_p1(world_mixture(config), config.topology, options);
  EXPECT_LE(sol.cost, 0.25 + 1e-12);
  for (double t : sol.far_targets) EXPECT_NEAR(t, 0.05, 1e-12);
}

TEST(Egc, Coefficients) {
  const auto g = Topology::chain(5);
  for (double c : egc_weights(g, 0.0).coefficients) EXPECT_EQ(c, 0.0);
  const auto e3 = egc_weights(g, 0.3);
  EXPECT_EQ(e3.coefficients, std::vector<double>(8, 0.3));
  EXPECT_FALSE(e3.exceeds_bound);
  EXPECT_TRUE(egc_weights(g, 1.0).exceeds_bound);
}

TEST(PatternSearch, FindsBoxedMaximum) {
  auto f = [](const std::vector<double>& x) { return -(x[0] - 0.3) * (x[0] - 0.3) - (x[1] - 2.0) * (x[1] - 2.0); };
  const auto r = pattern_search(f, {0.0, 0.0}, -1.0, 1.0, 0.25, 1e-6);
  EXPECT_NEAR(r.x[0], 0.3, 1e-5);
  EXPECT_EQ(r.x[1], 1.0);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_GT(r.trace[i], r.trace[i - 1]);
}

TEST(BlindAdapt, NoiselessStreamRecoversTruth) {
  const auto g = Topology::chain(5);
  const std::vector<double> e{4, 6, 5, 3, 7};
  CounterRng rng(43, 0);
  std::vector<std::vector<double>> gamma;
  std::vector<std::vector<int>> truth;
  for (int t = 0; t < 3000; ++t) {
    std::vector<int> x(5);
    std::vector<double> gm(5);
    const int a = rng.uniform() < 0.5 ? 1 : -1;
    for (int i = 0; i < 5; ++i) {
      x[i] = rng.uniform() < 0.8 ? a : -a;
      gm[i] = x[i] * e[i] / 2 + 1e-4 * rng.normal();
    }
    truth.push_back(x);
    gamma.push_back(gm);
  }
  const auto r = blind_adapt(g, gamma, 0.1, 3, truth);
  EXPECT_EQ(r.labels, truth);
  ASSERT_EQ(r.accuracy.size(), 4u);
  for (double a : r.accuracy) EXPECT_EQ(a, 1.0);
  for (int j = 0; j < 5; ++j)
    for (int v = 0; v < 2; ++v)
      for (const auto& c : r.moments[j].by_state[v])
        for (std::size_t m = 0; m < r.moments[j].members.size(); ++m) {
          const int node = r.moments[j].members[m];
          EXPECT_NEAR(c.mean[static_cast<Eigen::Index>(m)], c.config[m] * e[node] / 2, 0.01 * e[node] / 2);
        }
}

TEST(BlindAdapt, CorrectionImprovesLabels) {
  auto config = ScenarioConfig::benchmark();
  config.rho_db = -5.0;
  const auto records = run_campaign(config, 2500, 7, 1);
  std::vector<std::vector<double>> gamma;
  std::vector<std::vector<int>> truth;
  for (const auto& r : records) {
    gamma.push_back(r.gamma);
    truth.push_back(r.x);
  }
  const auto r = blind_adapt(config.topology, gamma, 0.1, 3, truth);
  ASSERT_EQ(r.accuracy.size(), 4u);
  EXPECT_GT(r.accuracy.back(), r.accuracy.front());
  EXPECT_EQ(r.solutions.size(), 5u);
}

TEST(BlindAdapt, SingleNodeIsAThresholdRule) {
  const auto g = Topology(1, {});
  CounterRng rng(44, 0);
  std::vector<std::vector<double>> gamma;
  for (int t = 0; t < 2000; ++t) gamma.push_back({(rng.uniform() < 0.5 ? 2.0 : -2.0) + rng.normal()});
  const auto r = blind_adapt(g, gamma, 0.1);
  double lowest_on = kInf, highest_off = -kInf;
  for (std::size_t t = 0; t < gamma.size(); ++t) {
    if (r.labels[t][0] > 0)
      lowest_on = std::min(lowest_on, gamma[t][0]);
    else
      highest_off = std::max(highest_off, gamma[t][0]);
  }
  EXPECT_LT(highest_off, lowest_on);
  EXPECT_TRUE(r.solutions[0].coefficients.empty());
}

TEST(BlindAdapt, OneClassIsAnError) {
  const auto g = Topology::chain(2);
  const std::vector<std::vector<double>> gamma(100, {1.0, 2.0});
  EXPECT_THROW(blind_adapt(g, gamma, 0.1), std::domain_error);
}
