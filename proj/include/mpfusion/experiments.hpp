#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <vector>

#include "mpfusion/config.hpp"
#include "mpfusion/detectors.hpp"
#include "mpfusion/engine_quadratic.hpp"
#include "mpfusion/output.hpp"
#include "mpfusion/scenario.hpp"

namespace mpfusion {

struct ExperimentSettings {
  ScenarioConfig scenario = ScenarioConfig::benchmark();
  std::vector<MethodSpec> methods;
  DetectorOptions options;
  bool truth_labels = false;
  std::int64_t trials = 20000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<double> roc_taus;

  static ExperimentSettings from(const RunConfig& config);
};

struct MethodOutcome {
  MethodSpec spec;
  std::vector<NodePerf> nodes;
  AveragePerf average;
  std::vector<double> thresholds;
  std::vector<double> predicted_pf;  // gfun at the thresholds
  std::vector<double> predicted_pd;
  std::vector<double> couplings;
  std::vector<double> coefficients;  // per arc
  Eigen::MatrixXd weights;           // linear methods
  bool exceeds_contraction_bound = false;
  std::vector<P2Solution> p2;
  std::optional<P1Solution> p1;
  std::vector<RocPoint> roc;  // on the evaluation campaign, when taus are configured
};

struct CellResult {
  double rho_db = 0.0;
  double delta_rho_db = 0.0;
  std::int64_t trials = 0;
  std::vector<MethodOutcome> methods;

  const MethodOutcome& method(const std::string& label) const;
};

/// Stream id of a campaign; depends on the purpose and the SNR point only.
std::uint64_t campaign_id(StreamPurpose purpose, const ScenarioConfig& scenario);

/// t, pu1.., x1.., gamma1..
CsvTable campaign_table(const ScenarioConfig& scenario, const std::vector<SlotRecord>& records);
/// One row per node: w1..wN, offset.
CsvTable weights_table(const Eigen::MatrixXd& weights, const Eigen::VectorXd& offset);
CsvTable roc_table(const std::vector<RocPoint>& points);

/// Training, calibration and evaluation of every method at one SNR point.
/// All methods see the same campaigns.
CellResult simulate_cell(const ExperimentSettings& settings);
std::vector<CellResult> sweep_snr(const ExperimentSettings& settings, const std::vector<double>& rho_grid);

/// One row per method and node; node averages go to the JSON report.
void append_perf_rows(CsvTable& table, const CellResult& cell);
CsvTable perf_table();
nlohmann::json cell_json(const CellResult& cell);

/// Couplings for the continuous engine and the gaussianity runs.
std::vector<double> resolve_couplings(const RunConfig& config, const ScenarioConfig& scenario);
QuadInstance quad_instance(const RunConfig& config, const ScenarioConfig& scenario);

struct LinearityLevel {
  int iteration = 0;
  double residual = 0.0;
  double max_offset = 0.0;
  int outside_radius = 0;          // entries with hop > l and |w| >= 1e-12
  int outside_previous_radius = 0;  // entries with hop > l - 1 and |w| >= 1e-12
  double max_at_radius = 0.0;       // largest |w| with hop == l
  FusionWeights weights;
};

std::vector<LinearityLevel> linearity_levels(const QuadInstance& instance, int max_iteration, int probes,
                                             std::uint64_t seed, double gamma_scale = 10.0);
nlohmann::json linearity_json(const QuadInstance& instance, const std::vector<LinearityLevel>& levels);

struct GaussianityNode {
  int node = 0;
  GaussianityResult fit;
  std::vector<double> samples;  // sorted
};

struct GaussianityCondition {
  std::vector<int> activity;
  std::vector<int> x;
  std::vector<GaussianityNode> nodes;
};

/// Decision variables of a discrete engine with the PU states held fixed.
std::vector<GaussianityCondition> run_gaussianity(const ScenarioConfig& scenario, Algorithm algorithm,
                                                  const std::vector<double>& couplings,
                                                  CouplingConvention convention, int iterations,
                                                  const std::vector<std::vector<int>>& conditions,
                                                  const std::vector<int>& nodes, std::int64_t trials,
                                                  std::uint64_t seed, int threads);

/// ||lambda - (gamma_j + sum_k J_kj gamma_k)||_2 / ||lambda||_2 over a batch of LLR vectors.
double neighbor_approximation_error(const QuadInstance& instance, int iterations,
                                    const std::vector<std::vector<double>>& gammas);

}  // namespace mpfusion
