#include "mpfusion/detectors.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "mpfusion/kernels.hpp"

namespace mpfusion {

std::string format_parameter(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string MethodSpec::label() const {
  switch (kind) {
    case MethodKind::local: return "local";
    case MethodKind::mp: return "mp" + format_parameter(parameter);
    case MethodKind::bp: return "bp" + format_parameter(parameter);
    case MethodKind::lin: return "lin" + format_parameter(parameter);
    case MethodKind::egc: return "egc" + format_parameter(parameter);
    case MethodKind::lin_prop: return "linProp";
    case MethodKind::lin_prop_blind: return "linPropB";
    case MethodKind::lin_opt: return "linOpt";
  }
  return "?";
}

MethodSpec MethodSpec::parse(std::string_view label) {
  if (label == "local") return {MethodKind::local, 0.0};
  if (label == "linProp") return {MethodKind::lin_prop, 0.0};
  if (label == "linPropB") return {MethodKind::lin_prop_blind, 0.0};
  if (label == "linOpt") return {MethodKind::lin_opt, 0.0};
  struct Prefix {
    std::string_view text;
    MethodKind kind;
  };
  for (const Prefix& p : {Prefix{"mp", MethodKind::mp}, Prefix{"bp", MethodKind::bp}, Prefix{"lin", MethodKind::lin},
                          Prefix{"egc", MethodKind::egc}}) {
    if (label.substr(0, p.text.size()) != p.text) continue;
    const std::string_view rest = label.substr(p.text.size());
    double value = 0.0;
    const auto r = std::from_chars(rest.data(), rest.data() + rest.size(), value);
    if (rest.empty() || r.ec != std::errc() || r.ptr != rest.data() + rest.size() || !std::isfinite(value)) break;
    return {p.kind, value};
  }
  throw std::invalid_argument("unknown method label '" + std::string(label) + "'");
}

int DetectorOptions::resolved_iterations(const Topology& topology) const {
  if (iterations < 0) throw std::invalid_argument("iteration budget must be non-negative");
  return iterations > 0 ? iterations : std::max(1, topology.node_count() - 1);
}

TrainingData TrainingData::from_records(std::span<const SlotRecord> records) {
  TrainingData out;
  for (const SlotRecord& r : records) {
    out.gamma.push_back(r.gamma);
    out.truth.push_back(r.x);
    std::vector<int> label;
    for (double g : r.gamma) label.push_back(g > 0.0 ? 1 : -1);
    out.labels.push_back(std::move(label));
  }
  return out;
}

void Detector::statistic(std::span<const double> gamma, std::span<double> out) const {
  const auto n = static_cast<std::size_t>(topology->node_count());
  if (gamma.size() != n || out.size() != n) throw std::invalid_argument("detector input size mismatch");
  if (engine) {
    const std::vector<double> lambda = engine->decision_variables(gamma, iterations);
    std::copy(lambda.begin(), lambda.end(), out.begin());
    return;
  }
  kernels::active().affine_map(weights.data(), n, n, gamma.data(), offset.data(), out.data());
}

std::vector<double> Detector::statistic(std::span<const double> gamma) const {
  std::vector<double> out(gamma.size());
  statistic(gamma, out);
  return out;
}

std::vector<int> Detector::decide(std::span<const double> gamma) const {
  if (thresholds.size() != gamma.size()) throw std::logic_error("detector is not calibrated");
  return mpfusion::decide(statistic(gamma), thresholds);
}

Eigen::MatrixXd linear_passing_weights(const Topology& topology, std::span<const double> arc_coefficients,
                                       int iterations) {
  const int n = topology.node_count();
  const FloodingEngine engine = FloodingEngine::linear(topology, {arc_coefficients.begin(), arc_coefficients.end()});
  Eigen::MatrixXd w(n, n);
  std::vector<double> probe(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    probe[i] = 1.0;
    const std::vector<double> column = engine.decision_variables(probe, iterations);
    probe[i] = 0.0;
    for (int j = 0; j < n; ++j) w(j, i) = column[j];
  }
  return w;
}

std::vector<P2Solution> analytic_p2(const Topology& topology, const StateMixture& mixture, double alpha) {
  std::vector<P2Solution> out;
  const double bound = contraction_bound(topology);
  for (int j = 0; j < topology.node_count(); ++j)
    out.push_back(optimize_p2(local_moments(mixture, topology, j, StatsMode::neighbors), alpha, bound));
  return out;
}

Detector build_detector(const MethodSpec& spec, const ScenarioConfig& scenario, const DetectorOptions& options,
                        const TrainingData& training, const StateMixture& mixture) {
  const Topology& g = scenario.topology;
  const int n = g.node_count();
  Detector d;
  d.spec = spec;
  d.topology = &g;
  d.iterations = options.resolved_iterations(g);
  d.offset = Eigen::VectorXd::Zero(n);

  auto learned = [&] {
    if (training.labels.empty()) throw std::invalid_argument(spec.label() + " needs a training window");
    return learn_couplings(g, training.labels, spec.parameter).couplings;
  };

  switch (spec.kind) {
    case MethodKind::local:
      d.weights = Eigen::MatrixXd::Identity(n, n);
      break;
    case MethodKind::mp:
    case MethodKind::bp:
      d.couplings = learned();
      d.engine = FloodingEngine::discrete(g, MrfParams(g, d.couplings),
                                          spec.kind == MethodKind::mp ? Algorithm::max_product : Algorithm::sum_product,
                                          options.coupling_convention);
      break;
    case MethodKind::lin: {
      d.couplings = learned();
      d.arc_coefficients = arc_couplings(g, MrfParams(g, d.couplings), options.coupling_convention);
      for (double& c : d.arc_coefficients) c = coefficient_from_coupling(c);
      d.weights = linear_passing_weights(g, d.arc_coefficients, d.iterations);
      break;
    }
    case MethodKind::egc: {
      const EgcCoefficients egc = egc_weights(g, spec.parameter);
      d.arc_coefficients = egc.coefficients;
      d.exceeds_contraction_bound = egc.exceeds_bound;
      d.weights = linear_passing_weights(g, d.arc_coefficients, d.iterations);
      break;
    }
    case MethodKind::lin_prop:
      d.p2 = analytic_p2(g, mixture, options.far);
      d.arc_coefficients = arc_coefficients(g, d.p2);
      d.weights = linear_passing_weights(g, d.arc_coefficients, d.iterations);
      break;
    case MethodKind::lin_prop_blind: {
      if (training.gamma.empty()) throw std::invalid_argument("linPropB needs a training window");
      BlindResult blind = blind_adapt(g, training.gamma, options.far, options.majority_rounds);
      d.p2 = std::move(blind.solutions);
      d.arc_coefficients = arc_coefficients(g, d.p2);
      d.weights = linear_passing_weights(g, d.arc_coefficients, d.iterations);
      break;
    }
    case MethodKind::lin_opt: {
      const std::vector<P2Solution> prop = analytic_p2(g, mixture, options.far);
      P1Options p1;
      p1.alpha = options.far;
      p1.seeds.push_back(linear_passing_weights(g, arc_coefficients(g, prop), d.iterations));
      for (double c0 : {0.1, 0.3, 1.0}) p1.seeds.push_back(linear_passing_weights(g, egc_weights(g, c0).coefficients, d.iterations));
      d.p1 = optimize_p1(mixture, g, p1);
      d.weights = d.p1->weights;
      break;
    }
  }
  return d;
}

std::vector<ConditionalStats> linear_stats(const Detector& detector, const StateMixture& mixture) {
  if (!detector.spec.is_linear()) throw std::logic_error("closed-form statistics need a linear detector");
  std::vector<ConditionalStats> out;
  for (int j = 0; j < detector.topology->node_count(); ++j)
    out.push_back(conditional_stats_from_weights(detector.weights, detector.offset, mixture, *detector.topology, j,
                                                 StatsMode::full));
  return out;
}

void calibrate_linear(Detector& detector, const StateMixture& mixture, double alpha) {
  detector.thresholds.clear();
  for (const ConditionalStats& s : linear_stats(detector, mixture))
    detector.thresholds.push_back(solve_threshold(s, -1, alpha));
}

void calibrate_empirical(Detector& detector, std::span<const SlotRecord> records, double alpha) {
  const int n = detector.topology->node_count();
  std::vector<std::vector<int>> x;
  std::vector<std::vector<double>> lambda(static_cast<std::size_t>(n));
  std::vector<double> out(static_cast<std::size_t>(n));
  for (const SlotRecord& r : records) {
    x.push_back(r.x);
    detector.statistic(r.gamma, out);
    for (int j = 0; j < n; ++j) lambda[j].push_back(out[j]);
  }
  detector.thresholds.clear();
  for (int j = 0; j < n; ++j)
    detector.thresholds.push_back(solve_threshold(empirical_conditional_stats(x, lambda[j], j), -1, alpha));
}

}  // namespace mpfusion
