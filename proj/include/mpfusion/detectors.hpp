#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpfusion/engine_discrete.hpp"
#include "mpfusion/optimizer.hpp"
#include "mpfusion/performance.hpp"
#include "mpfusion/scenario.hpp"

namespace mpfusion {

enum class MethodKind { local, mp, bp, lin, egc, lin_prop, lin_prop_blind, lin_opt };

/// A detector preset: local, mp{zeta}, bp{zeta}, lin{zeta}, egc{c0}, linProp, linPropB, linOpt.
struct MethodSpec {
  MethodKind kind = MethodKind::local;
  double parameter = 0.0;

  std::string label() const;
  static MethodSpec parse(std::string_view label);
  bool is_linear() const { return kind != MethodKind::mp && kind != MethodKind::bp; }
  bool operator==(const MethodSpec&) const = default;
};

/// Numbers shown with at least one decimal: 0.1, 1.0, 0.25.
std::string format_parameter(double value);

struct DetectorOptions {
  int iterations = 0;  // 0 selects N - 1
  CouplingConvention coupling_convention = CouplingConvention::merged;
  int majority_rounds = 3;
  double far = 0.1;  // false-alarm target for P2 and P1

  int resolved_iterations(const Topology& topology) const;
};

/// Training window: local LLRs and the labels used to learn couplings.
struct TrainingData {
  std::vector<std::vector<double>> gamma;
  std::vector<std::vector<int>> labels;  // local decisions gamma > 0
  std::vector<std::vector<int>> truth;

  static TrainingData from_records(std::span<const SlotRecord> records);
};

struct Detector {
  MethodSpec spec;
  const Topology* topology = nullptr;
  int iterations = 0;
  std::vector<double> couplings;          // learned J per edge (mp, bp, lin)
  std::vector<double> arc_coefficients;   // linear message passing coefficients per arc
  std::optional<FloodingEngine> engine;   // mp, bp
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> weights;  // linear methods
  Eigen::VectorXd offset;
  std::vector<double> thresholds;
  bool exceeds_contraction_bound = false;
  std::vector<P2Solution> p2;
  std::optional<P1Solution> p1;

  void statistic(std::span<const double> gamma, std::span<double> out) const;
  std::vector<double> statistic(std::span<const double> gamma) const;
  std::vector<int> decide(std::span<const double> gamma) const;
};

/// Extracts W of linear message passing by probing with unit LLR vectors.
Eigen::MatrixXd linear_passing_weights(const Topology& topology, std::span<const double> arc_coefficients,
                                       int iterations);

/// P2 coefficients from exact neighbor statistics of the scenario.
std::vector<P2Solution> analytic_p2(const Topology& topology, const StateMixture& mixture, double alpha);

/// Builds the fusion rule of a method. Thresholds are left empty.
Detector build_detector(const MethodSpec& spec, const ScenarioConfig& scenario, const DetectorOptions& options,
                        const TrainingData& training, const StateMixture& mixture);

/// Thresholds at Pf = alpha from the exact mixture (linear methods).
void calibrate_linear(Detector& detector, const StateMixture& mixture, double alpha);
/// Thresholds at Pf = alpha from per-configuration normal fits of labelled samples.
void calibrate_empirical(Detector& detector, std::span<const SlotRecord> records, double alpha);

/// Closed-form conditional statistics of a linear detector at every node.
std::vector<ConditionalStats> linear_stats(const Detector& detector, const StateMixture& mixture);

}  // namespace mpfusion
