#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mpfusion/graph.hpp"

namespace mpfusion {

inline int state_index(int v) { return v > 0 ? 1 : 0; }

/// Distribution over {-1,+1}^N; bit i of the index set means x_i = +1.
struct ConfigDistribution {
  int node_count = 0;
  std::vector<double> probability;

  static std::vector<int> config(std::uint32_t index, int node_count);
  double marginal(int node, int v) const;
};

/// p(x) proportional to exp(sum_edges exponent(J) x_i x_j), enumerated exhaustively.
ConfigDistribution joint_prior(const MrfParams& params, const Topology& topology,
                               CouplingConvention convention = CouplingConvention::raw);
/// Relative frequencies of observed configurations.
ConfigDistribution empirical_prior(std::span<const std::vector<int>> samples);

/// One hidden state of the world: its probability, the hypothesis vector it
/// induces and the conditional moments of every local LLR in it.
struct WorldState {
  double probability = 0.0;
  std::vector<int> x;
  std::vector<double> mean;
  std::vector<double> variance;
};
using StateMixture = std::vector<WorldState>;

/// Mixture where the world state is the hypothesis vector itself and the local
/// LLR moments depend only on x_i.
StateMixture mixture_from_prior(const ConfigDistribution& prior, std::span<const std::array<double, 2>> mean,
                                std::span<const std::array<double, 2>> variance);

enum class StatsMode { full, neighbors };

/// Joint moments of (gamma_i)_{i in members} given x_j = v and the
/// configuration of the members, merged by moment matching.
struct MomentComponent {
  double weight = 0.0;
  std::vector<int> config;  // x over members
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct LocalMoments {
  int node = 0;
  std::vector<int> members;  // node first, then the rest ascending
  std::array<std::vector<MomentComponent>, 2> by_state;
};

LocalMoments local_moments(const StateMixture& mixture, const Topology& topology, int node, StatsMode mode);

/// Same layout as local_moments, estimated from samples of (x, gamma).
LocalMoments empirical_local_moments(std::span<const std::vector<int>> x, std::span<const std::vector<double>> gamma,
                                     const Topology& topology, int node, StatsMode mode);

struct GaussianTerm {
  double weight;
  double mean;
  double stddev;
};

/// Mixture description of lambda_j given x_j = v, for v = -1 (index 0) and +1.
struct ConditionalStats {
  std::array<std::vector<GaussianTerm>, 2> by_state;
  const std::vector<GaussianTerm>& terms(int v) const { return by_state[state_index(v)]; }
};

/// Statistics of w^T gamma_members + offset.
ConditionalStats project(const LocalMoments& moments, std::span<const double> member_weights, double offset);

ConditionalStats conditional_stats_from_weights(const Eigen::MatrixXd& weights, const Eigen::VectorXd& offset,
                                                const StateMixture& mixture, const Topology& topology, int node,
                                                StatsMode mode);

/// Fits one normal per configuration to samples of a scalar statistic.
ConditionalStats empirical_conditional_stats(std::span<const std::vector<int>> x, std::span<const double> statistic,
                                             int node);

/// Pr{lambda_j > tau | x_j = v}.
double gfun(double tau, int v, const ConditionalStats& stats);
inline double gfun_neighbors(double tau, int v, const ConditionalStats& stats) { return gfun(tau, v, stats); }

/// tau with gfun(tau, v) = p.
double solve_threshold(const ConditionalStats& stats, int v, double p);

struct NodePerf {
  std::optional<double> pf;
  std::optional<double> pd;
  double stderr_pf = 0.0;
  double stderr_pd = 0.0;
  std::int64_t trials_absent = 0;
  std::int64_t trials_present = 0;
};

/// Integer tallies; merging is exact so results do not depend on scheduling.
struct PerfTally {
  std::vector<std::int64_t> absent, false_alarms, present, detections;

  explicit PerfTally(int node_count = 0);
  void add(std::span<const int> truth, std::span<const int> decision);
  void merge(const PerfTally& other);
  std::vector<NodePerf> report() const;
};

/// Average of available per-node probabilities, with a matching standard error.
struct AveragePerf {
  std::optional<double> pf;
  std::optional<double> pd;
  double stderr_pf = 0.0;
  double stderr_pd = 0.0;
};
AveragePerf average(std::span<const NodePerf> nodes);

struct RocPoint {
  int node;
  double tau;
  double pf;
  double pd;
  double stderr_pf;
  double stderr_pd;
};

/// Empirical ROC of one node from labelled samples of its statistic.
std::vector<RocPoint> empirical_roc(int node, std::span<const int> truth, std::span<const double> statistic,
                                    std::span<const double> taus);

struct GaussianityResult {
  double ks = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// KS sup-distance between the samples and a normal with their own moments.
GaussianityResult gaussianity_check(std::span<const double> samples);

}  // namespace mpfusion
