#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "mpfusion/graph.hpp"
#include "mpfusion/performance.hpp"

namespace mpfusion {

struct LearnedCouplings {
  std::vector<double> couplings;  // per edge
  int window = 0;
  double zeta = 0.0;
};

/// J_kj = zeta * (agreements - disagreements) / T over the decision history.
LearnedCouplings learn_couplings(const Topology& topology, std::span<const std::vector<int>> history, double zeta);

/// 1 / (max_degree - 1); infinite when no node has two neighbors.
double contraction_bound(const Topology& topology);

struct P2Solution {
  int node = 0;
  std::vector<int> neighbors;
  std::vector<double> coefficients;  // c_jk, ordered like neighbors
  double threshold = 0.0;
  double pd = 0.0;
  double pf = 0.0;
  int evaluations = 0;
  std::vector<double> trace;  // best objective after the grid and after every accepted move
};

/// Maximizes Pd of gamma_j + sum_k c_jk gamma_k at Pf = alpha over |c| < bound.
/// `moments` must be the neighbor-mode moments of the node.
/// Searches |c_k| <= min(bound, 10) * (1 - 1e-6), so the contraction bound holds strictly.
P2Solution optimize_p2(const LocalMoments& moments, double alpha, double bound);

/// Per-arc coefficients (arc k -> j carries c_jk) assembled from P2 solutions.
std::vector<double> arc_coefficients(const Topology& topology, std::span<const P2Solution> solutions);

struct P1Options {
  std::vector<double> rewards;  // default 1 per node
  std::vector<double> costs;    // default 1 per node
  double cost_budget = 1e300;
  double alpha = 0.1;
  double beta = 0.0;
  double box = 10.0;
  std::vector<Eigen::MatrixXd> seeds;  // extra starting weight matrices
};

struct P1Solution {
  Eigen::MatrixXd weights;
  std::vector<double> thresholds;
  std::vector<double> far_targets;
  std::vector<double> pd;
  std::vector<double> pf;
  double reward = 0.0;
  double cost = 0.0;
  bool feasible = false;
};

/// Best-effort search over rows of W (w_jj = 1) with exact mixture statistics.
P1Solution optimize_p1(const StateMixture& mixture, const Topology& topology, const P1Options& options);

struct EgcCoefficients {
  std::vector<double> coefficients;  // per arc
  bool exceeds_bound = false;
};

EgcCoefficients egc_weights(const Topology& topology, double c0);

struct BlindResult {
  std::vector<std::vector<int>> labels;  // corrected labels per slot
  std::vector<LocalMoments> moments;     // neighbor mode, per node
  std::vector<P2Solution> solutions;
  std::vector<double> accuracy;  // per round, starting with round 0; empty without truth
};

/// Offline label correction by majority vote followed by P2 on the estimated statistics.
BlindResult blind_adapt(const Topology& topology, std::span<const std::vector<double>> gamma, double alpha,
                        int rounds = 3, std::span<const std::vector<int>> truth = {});

/// Coordinate pattern search maximizing f over the box [lo, hi]^d. Steps halve
/// when no move improves; stops once the step is below min_step.
struct PatternResult {
  std::vector<double> x;
  double value;
  int evaluations;
  std::vector<double> trace;
};
PatternResult pattern_search(const std::function<double(const std::vector<double>&)>& f, std::vector<double> start,
                             double lo, double hi, double step, double min_step);

}  // namespace mpfusion
