#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpfusion/detectors.hpp"
#include "mpfusion/engine_quadratic.hpp"
#include "mpfusion/scenario.hpp"

namespace mpfusion {

/// Invalid configuration; `path()` names the offending field, e.g. "scenario.activity.correlation".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class CouplingSource { learned, fixed, uniform };
enum class TrainingLabels { local, truth };

struct CouplingSpec {
  CouplingSource source = CouplingSource::learned;
  std::vector<double> values;  // fixed: one per edge
  double low = 0.0;            // uniform: J ~ U(low, high) per edge
  double high = 100.0;
};

struct DetectorConfig {
  std::string algorithm = "mp";  // local, mp, bp, linear, linOpt, linProp, linPropB, egc
  double zeta = 0.1;
  double c0 = 0.3;
  int iterations = 0;  // 0 selects N - 1
  QuadConvention convention = QuadConvention::exact;
  CouplingConvention coupling_convention = CouplingConvention::merged;
  TrainingLabels training_labels = TrainingLabels::local;
  int majority_rounds = 3;
  CouplingSpec couplings;

  MethodSpec method() const;
};

struct EvaluationConfig {
  std::int64_t trials = 20000;
  double far = 0.1;
  std::vector<std::string> methods;  // empty: the detector block's method
  std::vector<double> rho_grid{-12.0, -9.0, -6.0, -3.0, 0.0};
  int linearity_probes = 100;
  std::vector<std::vector<int>> conditions{{1, 0}, {1, 1}};  // PU states for the gaussianity command
  std::vector<int> nodes{1, 3, 5};                            // reported nodes, 1-based
  int cdf_points = 101;
  std::vector<double> roc_taus;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  ScenarioConfig scenario = ScenarioConfig::benchmark();
  DetectorConfig detector;
  EvaluationConfig evaluation;
  std::string output_dir = "out";

  std::vector<MethodSpec> methods() const;
  DetectorOptions detector_options() const;
};

RunConfig parse_config(const nlohmann::json& document);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

}  // namespace mpfusion
