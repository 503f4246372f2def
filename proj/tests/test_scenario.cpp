#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mpfusion/scenario.hpp"

using namespace mpfusion;

namespace {

double find_db(const std::vector<SnrEntry>& table, int node, int pu) {
  for (const auto& e : table)
    if (e.node == node && e.pu == pu) return e.db;
  ADD_FAILURE() << "no entry for node " << node << " pu " << pu;
  return 0.0;
}

double correlation(const std::vector<std::vector<int>>& states) {
  double n = static_cast<double>(states.size()), a = 0, b = 0, ab = 0, aa = 0, bb = 0;
  for (const auto& s : states) {
    a += s[0];
    b += s[1];
    ab += s[0] * s[1];
    aa += s[0] * s[0];
    bb += s[1] * s[1];
  }
  const double cov = ab / n - a / n * b / n;
  return cov / std::sqrt((aa / n - a / n * a / n) * (bb / n - b / n * b / n));
}

std::vector<std::vector<int>> run_process(const ActivityProcess& p, int slots, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::vector<std::vector<int>> out;
  std::vector<int> state;
  for (int t = 0; t < slots; ++t) out.push_back(state = pu_process_step(state, p, rng));
  return out;
}

}  // namespace

TEST(SnrAssignment, BenchmarkPattern) {
  auto c = ScenarioConfig::benchmark();
  const auto t = snr_assignment(c);
  ASSERT_EQ(t.size(), 6u);
  EXPECT_DOUBLE_EQ(find_db(t, 0, 0), -4.0);
  EXPECT_DOUBLE_EQ(find_db(t, 1, 0), -5.0);
  EXPECT_DOUBLE_EQ(find_db(t, 2, 0), -6.0);
  EXPECT_DOUBLE_EQ(find_db(t, 2, 1), -5.0);
  EXPECT_DOUBLE_EQ(find_db(t, 3, 1), -6.0);
  EXPECT_DOUBLE_EQ(find_db(t, 4, 1), -4.0);
  for (const auto& e : t) EXPECT_NEAR(e.linear, std::pow(10.0, e.db / 10), 1e-15);

  c.delta_rho_db = 0.0;
  for (const auto& e : snr_assignment(c)) EXPECT_EQ(e.db, -5.0);
}

TEST(SnrAssignment, ProportionalDispersion) {
  auto c = ScenarioConfig::benchmark();
  c.dispersion_rule = DispersionRule::proportional;
  c.rho_db = -10.0;
  EXPECT_DOUBLE_EQ(c.delta_rho(), -1.0);
  const auto t = snr_assignment(c);
  EXPECT_DOUBLE_EQ(find_db(t, 0, 0), -11.0);
  EXPECT_DOUBLE_EQ(find_db(t, 2, 0), -9.0);
  EXPECT_DOUBLE_EQ(find_db(t, 4, 1), -11.0);
}

TEST(SnrAssignment, UncoveredNodeIsAnError) {
  auto c = ScenarioConfig::benchmark();
  c.coverage.pop_back();
  EXPECT_THROW(snr_assignment(c), std::invalid_argument);
}

TEST(PuProcess, FullCouplingSharesState) {
  ActivityProcess p;
  p.correlation = 1.0;
  const auto s = run_process(p, 20000, 1);
  for (const auto& v : s) EXPECT_EQ(v[0], v[1]);
}

TEST(PuProcess, NoCouplingIsUncorrelated) {
  ActivityProcess p;
  p.correlation = 0.0;
  const int n = 40000;
  const auto s = run_process(p, n, 2);
  // Dwell times inflate the variance of the sample correlation by (1 + r) / (1 - r) with r = 1 - refresh.
  const double r = 1.0 - p.refresh_probability;
  EXPECT_NEAR(correlation(s), 0.0, 3.0 / std::sqrt(n) * std::sqrt((1 + r * r) / (1 - r * r)));
}

TEST(PuProcess, ZeroFlipRateIsConstant) {
  ActivityProcess p;
  p.refresh_probability = 0.0;
  const auto s = run_process(p, 500, 3);
  for (const auto& v : s) EXPECT_EQ(v, s.front());

  ActivityProcess forced;
  forced.forced = {true, false};
  for (const auto& v : run_process(forced, 500, 4)) EXPECT_EQ(v, (std::vector<int>{1, 0}));
}

TEST(PuProcess, StationaryFrequencies) {
  ActivityProcess p;
  p.on_probability = {0.3, 0.6};
  p.correlation = 0.4;
  const int n = 100000;
  const auto s = run_process(p, n, 5);
  const auto law = stationary_activity(p, 2);
  double total = 0.0;
  for (double q : law) total += q;
  EXPECT_NEAR(total, 1.0, 1e-12);
  std::vector<double> freq(4, 0.0);
  for (const auto& v : s) freq[v[0] + 2 * v[1]] += 1.0 / n;
  const double r = 1.0 - p.refresh_probability;
  const double inflation = (1 + r) / (1 - r);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(freq[i], law[i], 3 * std::sqrt(law[i] * (1 - law[i]) * inflation / n));
  EXPECT_NEAR(freq[1] + freq[3], 0.3, 3 * std::sqrt(0.21 * inflation / n));
}

TEST(Walsh, Orthogonal) {
  const auto a = walsh(1, 100), b = walsh(2, 100);
  double dot = 0.0;
  for (int i = 0; i < 100; ++i) dot += a[i] * b[i];
  EXPECT_EQ(dot, 0.0);
  for (double v : a) EXPECT_EQ(std::abs(v), 1.0);
}

TEST(Campaign, HypothesesFollowCoverage) {
  const auto c = ScenarioConfig::benchmark();
  const auto records = run_campaign(c, 3000, 1, 1);
  for (const auto& r : records) {
    EXPECT_EQ(r.x[2] > 0, r.pu[0] || r.pu[1]);
    EXPECT_EQ(r.x[0] > 0, r.pu[0] == 1);
    EXPECT_EQ(r.x[4] > 0, r.pu[1] == 1);
  }
}

TEST(Campaign, ForcedOffGivesCalibratedFalseAlarms) {
  auto c = ScenarioConfig::benchmark();
  c.sensing = SensingMode::energy;
  c.activity.forced = {false, false};
  const int n = 40000;
  const auto records = run_campaign(c, n, 2, 2, 4);
  for (int j = 0; j < 5; ++j) {
    int hits = 0;
    for (const auto& r : records) {
      EXPECT_EQ(r.x[j], -1);
      hits += r.gamma[j] > 0.0;
    }
    EXPECT_NEAR(static_cast<double>(hits) / n, c.alpha, 0.015) << j;
  }
}

TEST(Campaign, ForcedOnHighSnrIsDetected) {
  for (auto mode : {SensingMode::coherent, SensingMode::energy}) {
    auto c = ScenarioConfig::benchmark();
    c.sensing = mode;
    c.rho_db = 10.0;
    c.activity.forced = {true, true};
    const auto records = run_campaign(c, 2000, 3, 3);
    for (const auto& r : records)
      for (double g : r.gamma) EXPECT_GT(g, 0.0);
  }
}

TEST(Campaign, DeterministicAcrossThreads) {
  auto c = ScenarioConfig::benchmark();
  c.sensing = SensingMode::energy;
  const auto a = run_campaign(c, 1500, 9, 4, 1);
  const auto b = run_campaign(c, 1500, 9, 4, 7);
  const auto d = run_campaign(c, 1500, 9, 4, 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].pu, b[t].pu);
    EXPECT_EQ(a[t].gamma, b[t].gamma);
    EXPECT_EQ(a[t].gamma, d[t].gamma);
  }
  const auto other = run_campaign(c, 10, 10, 4, 1);
  EXPECT_NE(other[0].gamma, a[0].gamma);
}

TEST(Campaign, TwoTransmittersDeliverMoreEnergy) {
  auto c = ScenarioConfig::benchmark();
  c.sensing = SensingMode::energy;
  auto one = c, both = c;
  one.activity.forced = {true, false};
  both.activity.forced = {true, true};
  const int n = 5000;
  double e1 = 0.0, e2 = 0.0;
  for (const auto& r : run_campaign(one, n, 4, 5)) e1 += r.gamma[2] / n;
  for (const auto& r : run_campaign(both, n, 4, 6)) e2 += r.gamma[2] / n;
  EXPECT_GT(e2, e1);
}

TEST(WorldMixture, MatchesCampaign) {
  auto c = ScenarioConfig::benchmark();
  const auto mix = world_mixture(c);
  double total = 0.0;
  for (const auto& w : mix) total += w.probability;
  EXPECT_NEAR(total, 1.0, 1e-12);
  // Mean LLR of node 1 given PU 1 active.
  const int n = 40000;
  const auto records = run_campaign(c, n, 5, 7);
  double sum = 0.0, count = 0.0;
  for (const auto& r : records)
    if (r.pu[0]) {
      sum += r.gamma[0];
      count += 1.0;
    }
  double expected = 0.0, weight = 0.0, var = 0.0;
  for (const auto& w : mix)
    if (w.x[0] > 0) {
      expected += w.probability * w.mean[0];
      var = w.variance[0];
      weight += w.probability;
    }
  EXPECT_NEAR(sum / count, expected / weight, 4 * std::sqrt(var / count));
}

TEST(ScenarioConfig, Validation) {
  auto c = ScenarioConfig::benchmark();
  c.activity.correlation = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ScenarioConfig::benchmark();
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ScenarioConfig::benchmark();
  c.coverage.push_back({0, 0, 0});
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
