#include "mpfusion/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mpfusion {

LearnedCouplings learn_couplings(const Topology& topology, std::span<const std::vector<int>> history, double zeta) {
  if (history.empty()) throw std::invalid_argument("learn_couplings needs a non-empty history");
  LearnedCouplings out;
  out.window = static_cast<int>(history.size());
  out.zeta = zeta;
  for (const Edge& e : topology.edges()) {
    long long excess = 0;
    for (const auto& x : history) {
      if (static_cast<int>(x.size()) != topology.node_count())
        throw std::invalid_argument("decision history does not match the topology");
      excess += x[e.a] == x[e.b] ? 1 : -1;
    }
    out.couplings.push_back(zeta * static_cast<double>(excess) / static_cast<double>(history.size()));
  }
  return out;
}

double contraction_bound(const Topology& topology) {
  int deg = 0;
  for (int n = 0; n < topology.node_count(); ++n) deg = std::max(deg, topology.degree(n));
  return deg > 1 ? 1.0 / (deg - 1) : std::numeric_limits<double>::infinity();
}

PatternResult pattern_search(const std::function<double(const std::vector<double>&)>& f, std::vector<double> start,
                             double lo, double hi, double step, double min_step) {
  PatternResult r{std::move(start), 0.0, 0, {}};
  for (double& v : r.x) v = std::clamp(v, lo, hi);
  r.value = f(r.x);
  ++r.evaluations;
  r.trace.push_back(r.value);
  while (step >= min_step) {
    bool improved = false;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      for (double dir : {1.0, -1.0}) {
        std::vector<double> trial = r.x;
        trial[i] = std::clamp(trial[i] + dir * step, lo, hi);
        if (trial[i] == r.x[i]) continue;
        const double value = f(trial);
        ++r.evaluations;
        if (value > r.value) {
          r.x = std::move(trial);
          r.value = value;
          r.trace.push_back(value);
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return r;
}

namespace {

struct RowObjective {
  const LocalMoments* moments;
  double alpha;

  // Pd at the threshold that pins Pf to alpha; free coordinates follow the node.
  std::pair<double, double> evaluate(const std::vector<double>& free) const {
    std::vector<double> w{1.0};
    w.insert(w.end(), free.begin(), free.end());
    const ConditionalStats stats = project(*moments, w, 0.0);
    const double tau = solve_threshold(stats, -1, alpha);
    return {tau, gfun(tau, 1, stats)};
  }
};

void check_moments(const LocalMoments& m) {
  for (int v = 0; v < 2; ++v) {
    if (m.by_state[v].empty())
      throw std::domain_error("node " + std::to_string(m.node + 1) + " has no samples with x = " +
                              (v ? "+1" : "-1"));
    for (const auto& c : m.by_state[v])
      if (!c.mean.allFinite() || !c.covariance.allFinite())
        throw std::domain_error("degenerate statistics at node " + std::to_string(m.node + 1));
  }
  bool spread = false;
  for (const auto& c : m.by_state[0]) spread = spread || c.covariance(0, 0) > 0.0;
  if (!spread) throw std::domain_error("degenerate statistics at node " + std::to_string(m.node + 1));
}

}  // namespace

P2Solution optimize_p2(const LocalMoments& moments, double alpha, double bound) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("optimize_p2: alpha must lie in (0, 1)");
  check_moments(moments);
  const RowObjective objective{&moments, alpha};
  const auto d = moments.members.size() - 1;
  const double limit = std::min(bound, 10.0) * (1.0 - 1e-6);

  P2Solution out;
  out.node = moments.node;
  out.neighbors.assign(moments.members.begin() + 1, moments.members.end());

  auto f = [&](const std::vector<double>& c) { return objective.evaluate(c).second; };
  std::vector<double> best(d, 0.0);
  double best_value = f(best);
  int evaluations = 1;

  // Coarse grid seed: the full 11^d lattice when small, axis lines otherwise.
  constexpr int kGrid = 11;
  auto grid_value = [&](int i) { return -limit + 2.0 * limit * i / (kGrid - 1); };
  if (d > 0 && std::pow(double(kGrid), double(d)) <= 20000.0) {
    std::vector<int> idx(d, 0);
    while (true) {
      std::vector<double> c(d);
      for (std::size_t i = 0; i < d; ++i) c[i] = grid_value(idx[i]);
      const double value = f(c);
      ++evaluations;
      if (value > best_value) {
        best_value = value;
        best = c;
      }
      std::size_t pos = 0;
      while (pos < d && ++idx[pos] == kGrid) idx[pos++] = 0;
      if (pos == d) break;
    }
  } else {
    for (std::size_t axis = 0; axis < d; ++axis)
      for (int i = 0; i < kGrid; ++i) {
        std::vector<double> c(d, 0.0);
        c[axis] = grid_value(i);
        const double value = f(c);
        ++evaluations;
        if (value > best_value) {
          best_value = value;
          best = c;
        }
      }
  }

  PatternResult r = pattern_search(f, best, -limit, limit, limit / 10.0, 1e-5);
  out.coefficients = r.x;
  out.evaluations = evaluations + r.evaluations;
  out.trace = std::move(r.trace);
  const auto [tau, pd] = objective.evaluate(out.coefficients);
  out.threshold = tau;
  out.pd = pd;
  out.pf = alpha;
  return out;
}

std::vector<double> arc_coefficients(const Topology& topology, std::span<const P2Solution> solutions) {
  std::vector<double> out(topology.arcs().size(), 0.0);
  for (const P2Solution& s : solutions)
    for (std::size_t i = 0; i < s.neighbors.size(); ++i)
      out[static_cast<std::size_t>(topology.arc_index(s.neighbors[i], s.node))] = s.coefficients[i];
  return out;
}

P1Solution optimize_p1(const StateMixture& mixture, const Topology& topology, const P1Options& options) {
  const int n = topology.node_count();
  auto per_node = [n](const std::vector<double>& v, const char* name) {
    if (v.empty()) return std::vector<double>(static_cast<std::size_t>(n), 1.0);
    if (static_cast<int>(v.size()) != n) throw std::invalid_argument(std::string("P1: one ") + name + " per node");
    return v;
  };
  const std::vector<double> rewards = per_node(options.rewards, "reward");
  const std::vector<double> costs = per_node(options.costs, "cost");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw std::domain_error("P1: alpha must lie in (0, 1)");

  P1Solution out;
  double planned = 0.0;
  for (double c : costs) planned += c * options.alpha;
  const double scale = planned > options.cost_budget ? options.cost_budget / planned : 1.0;
  out.far_targets.assign(static_cast<std::size_t>(n), options.alpha * scale);

  out.weights = Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j < n; ++j) {
    const LocalMoments moments = local_moments(mixture, topology, j, StatsMode::full);
    check_moments(moments);
    const RowObjective objective{&moments, out.far_targets[j]};
    auto f = [&](const std::vector<double>& w) { return objective.evaluate(w).second; };

    std::vector<std::vector<double>> starts{std::vector<double>(static_cast<std::size_t>(n - 1), 0.0)};
    for (const Eigen::MatrixXd& seed : options.seeds) {
      if (seed.rows() != n || seed.cols() != n || !(seed(j, j) > 0.0)) continue;
      std::vector<double> s;
      for (std::size_t m = 1; m < moments.members.size(); ++m) s.push_back(seed(j, moments.members[m]) / seed(j, j));
      starts.push_back(std::move(s));
    }
    PatternResult best{{}, -1.0, 0, {}};
    for (const auto& s : starts) {
      PatternResult r = pattern_search(f, s, -options.box, options.box, 0.25, 1e-5);
      if (r.value > best.value) best = std::move(r);
    }
    for (std::size_t m = 1; m < moments.members.size(); ++m) out.weights(j, moments.members[m]) = best.x[m - 1];
    const auto [tau, pd] = objective.evaluate(best.x);
    out.thresholds.push_back(tau);
    out.pd.push_back(pd);
    out.pf.push_back(out.far_targets[j]);
  }
  out.feasible = true;
  for (int j = 0; j < n; ++j) {
    out.reward += rewards[j] * out.pd[j];
    out.cost += costs[j] * out.pf[j];
    if (out.pd[j] < options.beta) out.feasible = false;
  }
  if (out.cost > options.cost_budget * (1.0 + 1e-12)) out.feasible = false;
  return out;
}

EgcCoefficients egc_weights(const Topology& topology, double c0) {
  return {std::vector<double>(topology.arcs().size(), c0), std::abs(c0) >= contraction_bound(topology)};
}

BlindResult blind_adapt(const Topology& topology, std::span<const std::vector<double>> gamma, double alpha,
                        int rounds, std::span<const std::vector<int>> truth) {
  if (gamma.empty()) throw std::invalid_argument("blind_adapt needs a non-empty stream");
  if (rounds < 0) throw std::invalid_argument("blind_adapt: rounds must be non-negative");
  if (!truth.empty() && truth.size() != gamma.size()) throw std::invalid_argument("truth stream length differs");
  const int n = topology.node_count();
  const std::size_t slots = gamma.size();

  BlindResult out;
  out.labels.assign(slots, std::vector<int>(static_cast<std::size_t>(n)));
  for (std::size_t t = 0; t < slots; ++t) {
    if (static_cast<int>(gamma[t].size()) != n) throw std::invalid_argument("LLR stream does not match the topology");
    for (int j = 0; j < n; ++j) out.labels[t][j] = gamma[t][j] > 0.0 ? 1 : -1;
  }
  auto accuracy = [&] {
    if (truth.empty()) return;
    long long hits = 0;
    for (std::size_t t = 0; t < slots; ++t)
      for (int j = 0; j < n; ++j) hits += out.labels[t][j] == truth[t][j];
    out.accuracy.push_back(static_cast<double>(hits) / static_cast<double>(slots * n));
  };
  accuracy();

  // Votes are weighted by their log-odds so a confident own estimate is not
  // outvoted by neighbors whose hypotheses merely tend to agree.
  struct ClassFit {
    double mean[2];
    double variance;
    double log_prior[2];
  };
  std::vector<ClassFit> fit(static_cast<std::size_t>(n));
  auto log_density = [&](int k, int v, double g) {
    const ClassFit& f = fit[k];
    return -0.5 * (g - f.mean[v]) * (g - f.mean[v]) / f.variance;
  };
  for (int round = 0; round < rounds; ++round) {
    for (int k = 0; k < n; ++k) {
      double count[2] = {0, 0}, sum[2] = {0, 0};
      for (std::size_t t = 0; t < slots; ++t) {
        const int v = state_index(out.labels[t][k]);
        count[v] += 1.0;
        sum[v] += gamma[t][k];
      }
      if (count[0] == 0.0 || count[1] == 0.0)
        throw std::domain_error("blind_adapt: all labels of node " + std::to_string(k + 1) + " fall in one class");
      ClassFit& f = fit[k];
      for (int v = 0; v < 2; ++v) {
        f.mean[v] = sum[v] / count[v];
        f.log_prior[v] = std::log(count[v] / static_cast<double>(slots));
      }
      double squares = 0.0;
      for (std::size_t t = 0; t < slots; ++t) {
        const double d = gamma[t][k] - f.mean[state_index(out.labels[t][k])];
        squares += d * d;
      }
      const double scale = std::abs(f.mean[1] - f.mean[0]) + 1.0;
      f.variance = std::max(squares / static_cast<double>(slots), 1e-24 * scale * scale);
    }
    // P(x_k = u | x_j = v) from label co-occurrence, add-one smoothed.
    std::vector<std::array<std::array<double, 2>, 2>> given(topology.arcs().size());
    for (std::size_t a = 0; a < topology.arcs().size(); ++a) {
      const Arc& arc = topology.arcs()[a];
      double c[2][2] = {{1, 1}, {1, 1}};
      for (std::size_t t = 0; t < slots; ++t)
        c[state_index(out.labels[t][arc.to])][state_index(out.labels[t][arc.from])] += 1.0;
      for (int v = 0; v < 2; ++v)
        for (int u = 0; u < 2; ++u) given[a][v][u] = c[v][u] / (c[v][0] + c[v][1]);
    }

    std::vector<std::vector<int>> next = out.labels;
    for (std::size_t t = 0; t < slots; ++t) {
      for (int j = 0; j < n; ++j) {
        double score = fit[j].log_prior[1] - fit[j].log_prior[0] + log_density(j, 1, gamma[t][j]) -
                       log_density(j, 0, gamma[t][j]);
        for (int a : topology.incoming_arcs(j)) {
          const int k = topology.arcs()[a].from;
          double vote[2];
          for (int v = 0; v < 2; ++v) {
            const double l0 = std::log(given[a][v][0]) + log_density(k, 0, gamma[t][k]);
            const double l1 = std::log(given[a][v][1]) + log_density(k, 1, gamma[t][k]);
            vote[v] = std::max(l0, l1) + std::log1p(std::exp(-std::abs(l0 - l1)));
          }
          score += vote[1] - vote[0];
        }
        if (score != 0.0) next[t][j] = score > 0.0 ? 1 : -1;
      }
    }
    out.labels = std::move(next);
    accuracy();
  }

  const double bound = contraction_bound(topology);
  for (int j = 0; j < n; ++j) {
    out.moments.push_back(empirical_local_moments(out.labels, gamma, topology, j, StatsMode::neighbors));
    out.solutions.push_back(optimize_p2(out.moments.back(), alpha, bound));
  }
  return out;
}

}  // namespace mpfusion
