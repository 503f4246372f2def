#include "mpfusion/performance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "mpfusion/signal.hpp"

namespace mpfusion {

std::vector<int> ConfigDistribution::config(std::uint32_t index, int node_count) {
  std::vector<int> x(static_cast<std::size_t>(node_count));
  for (int i = 0; i < node_count; ++i) x[i] = (index >> i) & 1u ? 1 : -1;
  return x;
}

double ConfigDistribution::marginal(int node, int v) const {
  double total = 0.0;
  for (std::uint32_t s = 0; s < probability.size(); ++s)
    if ((((s >> node) & 1u) != 0) == (v > 0)) total += probability[s];
  return total;
}

namespace {

std::uint32_t config_index(std::span<const int> x) {
  std::uint32_t index = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 1 && x[i] != -1) throw std::invalid_argument("hypothesis entries must be -1 or +1");
    if (x[i] > 0) index |= 1u << i;
  }
  return index;
}

std::vector<int> member_list(const Topology& topology, int node, StatsMode mode) {
  topology.check_node(node);
  std::vector<int> members{node};
  if (mode == StatsMode::neighbors) {
    for (int n : topology.neighbors(node)) members.push_back(n);
  } else {
    for (int n = 0; n < topology.node_count(); ++n)
      if (n != node) members.push_back(n);
  }
  return members;
}

struct Accumulator {
  double weight = 0.0;
  Eigen::VectorXd first;
  Eigen::MatrixXd second;
};

void finish(std::map<std::vector<int>, Accumulator>& groups, double total, std::vector<MomentComponent>& out) {
  for (auto& [config, acc] : groups) {
    MomentComponent c;
    c.config = config;
    c.weight = acc.weight / total;
    c.mean = acc.first / acc.weight;
    c.covariance = acc.second / acc.weight - c.mean * c.mean.transpose();
    out.push_back(std::move(c));
  }
}

}  // namespace

ConfigDistribution joint_prior(const MrfParams& params, const Topology& topology, CouplingConvention convention) {
  const int n = topology.node_count();
  if (n > 20) throw std::length_error("joint_prior enumerates 2^N states; use empirical_prior for N > 20");
  if (params.couplings().size() != topology.edges().size())
    throw std::invalid_argument("couplings do not match the topology");
  const std::uint32_t count = 1u << n;
  std::vector<double> logw(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    double e = 0.0;
    for (std::size_t k = 0; k < topology.edges().size(); ++k) {
      const Edge& edge = topology.edges()[k];
      const int same = (((s >> edge.a) ^ (s >> edge.b)) & 1u) ? -1 : 1;
      e += pairwise_exponent(params.coupling(static_cast<int>(k)), convention) * same;
    }
    logw[s] = e;
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  ConfigDistribution out{n, std::vector<double>(count)};
  double total = 0.0;
  for (std::uint32_t s = 0; s < count; ++s) total += out.probability[s] = std::exp(logw[s] - top);
  for (double& p : out.probability) p /= total;
  return out;
}

ConfigDistribution empirical_prior(std::span<const std::vector<int>> samples) {
  if (samples.empty()) throw std::invalid_argument("empirical_prior needs at least one sample");
  const int n = static_cast<int>(samples.front().size());
  if (n > 20) throw std::length_error("empirical_prior supports at most 20 nodes");
  ConfigDistribution out{n, std::vector<double>(std::size_t{1} << n, 0.0)};
  for (const auto& x : samples) {
    if (static_cast<int>(x.size()) != n) throw std::invalid_argument("samples have different lengths");
    out.probability[config_index(x)] += 1.0;
  }
  for (double& p : out.probability) p /= static_cast<double>(samples.size());
  return out;
}

StateMixture mixture_from_prior(const ConfigDistribution& prior, std::span<const std::array<double, 2>> mean,
                                std::span<const std::array<double, 2>> variance) {
  if (static_cast<int>(mean.size()) != prior.node_count || static_cast<int>(variance.size()) != prior.node_count)
    throw std::invalid_argument("moment tables do not match the prior");
  StateMixture out;
  for (std::uint32_t s = 0; s < prior.probability.size(); ++s) {
    if (prior.probability[s] <= 0.0) continue;
    WorldState w;
    w.probability = prior.probability[s];
    w.x = ConfigDistribution::config(s, prior.node_count);
    for (int i = 0; i < prior.node_count; ++i) {
      w.mean.push_back(mean[i][state_index(w.x[i])]);
      w.variance.push_back(variance[i][state_index(w.x[i])]);
    }
    out.push_back(std::move(w));
  }
  return out;
}

LocalMoments local_moments(const StateMixture& mixture, const Topology& topology, int node, StatsMode mode) {
  LocalMoments out;
  out.node = node;
  out.members = member_list(topology, node, mode);
  const auto m = static_cast<Eigen::Index>(out.members.size());

  std::array<std::map<std::vector<int>, Accumulator>, 2> groups;
  std::array<double, 2> totals{0.0, 0.0};
  for (const WorldState& w : mixture) {
    if (static_cast<int>(w.x.size()) != topology.node_count())
      throw std::invalid_argument("world state does not match the topology");
    if (w.probability <= 0.0) continue;
    std::vector<int> config;
    Eigen::VectorXd mu(m);
    Eigen::VectorXd var(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const int member = out.members[static_cast<std::size_t>(i)];
      config.push_back(w.x[member]);
      mu[i] = w.mean[member];
      var[i] = w.variance[member];
    }
    const int v = state_index(w.x[node]);
    auto& acc = groups[v][config];
    if (acc.weight == 0.0) {
      acc.first = Eigen::VectorXd::Zero(m);
      acc.second = Eigen::MatrixXd::Zero(m, m);
    }
    acc.weight += w.probability;
    acc.first += w.probability * mu;
    acc.second += w.probability * (Eigen::MatrixXd(var.asDiagonal()) + mu * mu.transpose());
    totals[v] += w.probability;
  }
  for (int v = 0; v < 2; ++v) finish(groups[v], totals[v], out.by_state[v]);
  return out;
}

LocalMoments empirical_local_moments(std::span<const std::vector<int>> x, std::span<const std::vector<double>> gamma,
                                     const Topology& topology, int node, StatsMode mode) {
  if (x.size() != gamma.size()) throw std::invalid_argument("label and LLR streams differ in length");
  LocalMoments out;
  out.node = node;
  out.members = member_list(topology, node, mode);
  const auto m = static_cast<Eigen::Index>(out.members.size());

  std::array<std::map<std::vector<int>, Accumulator>, 2> groups;
  std::array<double, 2> totals{0.0, 0.0};
  Eigen::VectorXd g(m);
  for (std::size_t t = 0; t < x.size(); ++t) {
    std::vector<int> config;
    for (Eigen::Index i = 0; i < m; ++i) {
      const int member = out.members[static_cast<std::size_t>(i)];
      config.push_back(x[t][member]);
      g[i] = gamma[t][member];
    }
    const int v = state_index(x[t][node]);
    auto& acc = groups[v][config];
    if (acc.weight == 0.0) {
      acc.first = Eigen::VectorXd::Zero(m);
      acc.second = Eigen::MatrixXd::Zero(m, m);
    }
    acc.weight += 1.0;
    acc.first += g;
    acc.second += g * g.transpose();
    totals[v] += 1.0;
  }
  for (int v = 0; v < 2; ++v) finish(groups[v], totals[v], out.by_state[v]);
  return out;
}

ConditionalStats project(const LocalMoments& moments, std::span<const double> member_weights, double offset) {
  if (member_weights.size() != moments.members.size())
    throw std::invalid_argument("one weight per member expected");
  const Eigen::Map<const Eigen::VectorXd> w(member_weights.data(), static_cast<Eigen::Index>(member_weights.size()));
  ConditionalStats out;
  for (int v = 0; v < 2; ++v) {
    for (const MomentComponent& c : moments.by_state[v]) {
      const double variance = w.dot(c.covariance * w);
      out.by_state[v].push_back({c.weight, w.dot(c.mean) + offset, std::sqrt(std::max(variance, 0.0))});
    }
  }
  return out;
}

ConditionalStats conditional_stats_from_weights(const Eigen::MatrixXd& weights, const Eigen::VectorXd& offset,
                                                const StateMixture& mixture, const Topology& topology, int node,
                                                StatsMode mode) {
  const int n = topology.node_count();
  if (weights.rows() != n || weights.cols() != n || offset.size() != n)
    throw std::invalid_argument("weight matrix does not match the topology");
  const LocalMoments moments = local_moments(mixture, topology, node, mode);
  std::vector<double> w;
  for (int member : moments.members) w.push_back(weights(node, member));
  return project(moments, w, offset[node]);
}

ConditionalStats empirical_conditional_stats(std::span<const std::vector<int>> x, std::span<const double> statistic,
                                             int node) {
  if (x.size() != statistic.size()) throw std::invalid_argument("label and statistic streams differ in length");
  struct Moments {
    double count = 0.0, sum = 0.0, squares = 0.0;
  };
  std::array<std::map<std::vector<int>, Moments>, 2> groups;
  std::array<double, 2> totals{0.0, 0.0};
  for (std::size_t t = 0; t < x.size(); ++t) {
    const int v = state_index(x[t].at(static_cast<std::size_t>(node)));
    auto& g = groups[v][x[t]];
    g.count += 1.0;
    g.sum += statistic[t];
    g.squares += statistic[t] * statistic[t];
    totals[v] += 1.0;
  }
  ConditionalStats out;
  for (int v = 0; v < 2; ++v) {
    for (const auto& [config, g] : groups[v]) {
      const double mean = g.sum / g.count;
      const double var = g.count > 1.0 ? (g.squares - g.count * mean * mean) / (g.count - 1.0) : 0.0;
      out.by_state[v].push_back({g.count / totals[v], mean, std::sqrt(std::max(var, 0.0))});
    }
  }
  return out;
}

double gfun(double tau, int v, const ConditionalStats& stats) {
  const auto& terms = stats.terms(v);
  if (terms.empty()) throw std::domain_error("no configurations with x_j = " + std::to_string(v));
  double total = 0.0;
  for (const GaussianTerm& t : terms) {
    if (t.stddev > 0.0)
      total += t.weight * q_function((tau - t.mean) / t.stddev);
    else if (tau < t.mean)
      total += t.weight;
  }
  return std::clamp(total, 0.0, 1.0);
}

double solve_threshold(const ConditionalStats& stats, int v, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("solve_threshold: target must lie in (0, 1)");
  const auto& terms = stats.terms(v);
  if (terms.empty()) throw std::domain_error("no configurations with x_j = " + std::to_string(v));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double spread = 0.0;
  for (const GaussianTerm& t : terms) {
    if (!std::isfinite(t.mean) || !std::isfinite(t.stddev) || !std::isfinite(t.weight))
      throw std::domain_error("solve_threshold: non-finite statistics");
    lo = std::min(lo, t.mean);
    hi = std::max(hi, t.mean);
    spread = std::max(spread, t.stddev);
  }
  double step = std::max(spread, 1e-3);
  while (gfun(lo, v, stats) < p) {
    lo -= step;
    step *= 2.0;
  }
  step = std::max(spread, 1e-3);
  while (gfun(hi, v, stats) > p) {
    hi += step;
    step *= 2.0;
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double g = gfun(mid, v, stats);
    if (g == p) return mid;
    (g > p ? lo : hi) = mid;
  }
  // Both ends are within rounding; keep the one closer to the target.
  return std::abs(gfun(lo, v, stats) - p) <= std::abs(gfun(hi, v, stats) - p) ? lo : hi;
}

PerfTally::PerfTally(int node_count)
    : absent(static_cast<std::size_t>(node_count), 0),
      false_alarms(static_cast<std::size_t>(node_count), 0),
      present(static_cast<std::size_t>(node_count), 0),
      detections(static_cast<std::size_t>(node_count), 0) {}

void PerfTally::add(std::span<const int> truth, std::span<const int> decision) {
  if (truth.size() != absent.size() || decision.size() != absent.size())
    throw std::invalid_argument("tally size mismatch");
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (truth[j] > 0) {
      ++present[j];
      detections[j] += decision[j] > 0;
    } else {
      ++absent[j];
      false_alarms[j] += decision[j] > 0;
    }
  }
}

void PerfTally::merge(const PerfTally& other) {
  if (other.absent.size() != absent.size()) throw std::invalid_argument("tally size mismatch");
  for (std::size_t j = 0; j < absent.size(); ++j) {
    absent[j] += other.absent[j];
    false_alarms[j] += other.false_alarms[j];
    present[j] += other.present[j];
    detections[j] += other.detections[j];
  }
}

namespace {

void rate(std::int64_t hits, std::int64_t n, std::optional<double>& p, double& se) {
  if (n == 0) return;
  const double r = static_cast<double>(hits) / static_cast<double>(n);
  p = r;
  se = std::sqrt(r * (1.0 - r) / static_cast<double>(n));
}

}  // namespace

std::vector<NodePerf> PerfTally::report() const {
  std::vector<NodePerf> out(absent.size());
  for (std::size_t j = 0; j < absent.size(); ++j) {
    rate(false_alarms[j], absent[j], out[j].pf, out[j].stderr_pf);
    rate(detections[j], present[j], out[j].pd, out[j].stderr_pd);
    out[j].trials_absent = absent[j];
    out[j].trials_present = present[j];
  }
  return out;
}

AveragePerf average(std::span<const NodePerf> nodes) {
  AveragePerf out;
  double pf = 0.0, pd = 0.0, vf = 0.0, vd = 0.0;
  int nf = 0, nd = 0;
  for (const NodePerf& n : nodes) {
    if (n.pf) {
      pf += *n.pf;
      vf += n.stderr_pf * n.stderr_pf;
      ++nf;
    }
    if (n.pd) {
      pd += *n.pd;
      vd += n.stderr_pd * n.stderr_pd;
      ++nd;
    }
  }
  if (nf > 0) {
    out.pf = pf / nf;
    out.stderr_pf = std::sqrt(vf) / nf;
  }
  if (nd > 0) {
    out.pd = pd / nd;
    out.stderr_pd = std::sqrt(vd) / nd;
  }
  return out;
}

std::vector<RocPoint> empirical_roc(int node, std::span<const int> truth, std::span<const double> statistic,
                                    std::span<const double> taus) {
  if (truth.size() != statistic.size()) throw std::invalid_argument("label and statistic streams differ in length");
  std::vector<double> absent, present;
  for (std::size_t t = 0; t < truth.size(); ++t) (truth[t] > 0 ? present : absent).push_back(statistic[t]);
  if (absent.empty() || present.empty()) throw std::domain_error("ROC needs samples from both hypotheses");
  std::sort(absent.begin(), absent.end());
  std::sort(present.begin(), present.end());
  auto above = [](const std::vector<double>& sorted, double tau) {
    return static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), tau)) /
           static_cast<double>(sorted.size());
  };
  std::vector<RocPoint> out;
  for (double tau : taus) {
    const double pf = above(absent, tau);
    const double pd = above(present, tau);
    out.push_back({node, tau, pf, pd, std::sqrt(pf * (1.0 - pf) / static_cast<double>(absent.size())),
                   std::sqrt(pd * (1.0 - pd) / static_cast<double>(present.size()))});
  }
  return out;
}

GaussianityResult gaussianity_check(std::span<const double> samples) {
  if (samples.size() < 100) throw std::invalid_argument("gaussianity_check needs at least 100 samples");
  const auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= n - 1.0;
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) throw std::domain_error("gaussianity_check: degenerate variance");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf((sorted[i] - mean) / sd);
    ks = std::max({ks, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return {ks, mean, sd};
}

}  // namespace mpfusion
