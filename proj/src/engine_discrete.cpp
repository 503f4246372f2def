#include "mpfusion/engine_discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpfusion {

MessageState MessageState::zero(const Topology& topology, Algorithm algorithm) {
  return {algorithm, 0, std::vector<double>(topology.arcs().size(), 0.0)};
}

double s_transfer(double a, double b) {
  const double t = std::tanh(0.5 * a) * std::tanh(0.5 * b);
  if (std::abs(t) < 0.5) return 2.0 * std::atanh(t);
  // Near saturation atanh loses digits; use the shifted log-sum-exp form.
  const double sign = (a < 0.0) != (b < 0.0) ? -1.0 : 1.0;
  const double x = std::abs(a);
  const double y = std::abs(b);
  return sign * (std::min(x, y) + std::log1p(std::exp(-(x + y))) - std::log1p(std::exp(-std::abs(x - y))));
}

double coefficient_from_coupling(double coupling) { return std::tanh(0.5 * coupling); }

std::vector<double> arc_couplings(const Topology& topology, const MrfParams& params, CouplingConvention convention) {
  if (params.couplings().size() != topology.edges().size())
    throw std::invalid_argument("couplings do not match the topology");
  std::vector<double> out;
  out.reserve(topology.arcs().size());
  for (const Arc& arc : topology.arcs()) out.push_back(effective_coupling(params.coupling(arc.edge), convention));
  return out;
}

namespace {

// Max-product message for x_j = +1 minus x_j = -1, from the two-point max over
// x_k of x_k h / 2 + (J_eff / 2) x_k x_j.
double maxprod_message(double j_eff, double h) {
  const double half = 0.5 * j_eff;
  const double plus = std::max(0.5 * h + half, -0.5 * h - half);
  const double minus = std::max(0.5 * h - half, -0.5 * h + half);
  return plus - minus;
}

void check_gamma(const Topology& topology, std::span<const double> gamma) {
  if (static_cast<int>(gamma.size()) != topology.node_count())
    throw std::invalid_argument("LLR vector length does not match node count");
}

}  // namespace

FloodingEngine::FloodingEngine(const Topology& topology, Algorithm algorithm, std::vector<double> arc_parameter)
    : topology_(&topology), algorithm_(algorithm), arc_parameter_(std::move(arc_parameter)) {
  if (arc_parameter_.size() != topology.arcs().size())
    throw std::invalid_argument("expected one parameter per directed edge");
}

FloodingEngine FloodingEngine::discrete(const Topology& topology, const MrfParams& params, Algorithm algorithm,
                                        CouplingConvention convention) {
  if (algorithm == Algorithm::linearized) {
    auto c = arc_couplings(topology, params, convention);
    for (double& x : c) x = coefficient_from_coupling(x);
    return FloodingEngine(topology, algorithm, std::move(c));
  }
  return FloodingEngine(topology, algorithm, arc_couplings(topology, params, convention));
}

FloodingEngine FloodingEngine::linear(const Topology& topology, std::vector<double> coefficients) {
  return FloodingEngine(topology, Algorithm::linearized, std::move(coefficients));
}

void FloodingEngine::step(MessageState& state, std::span<const double> gamma) const {
  check_gamma(*topology_, gamma);
  if (state.algorithm != algorithm_) throw std::invalid_argument("message state belongs to another algorithm");
  const auto& arcs = topology_->arcs();
  if (state.delta.size() != arcs.size()) throw std::invalid_argument("message state does not match the topology");

  std::vector<double> next(arcs.size());
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    const Arc& arc = arcs[a];
    double h = gamma[arc.from];
    for (int in : topology_->incoming_arcs(arc.from))
      if (arcs[in].from != arc.to) h += state.delta[in];
    switch (algorithm_) {
      case Algorithm::sum_product: next[a] = s_transfer(arc_parameter_[a], h); break;
      case Algorithm::max_product: next[a] = maxprod_message(arc_parameter_[a], h); break;
      case Algorithm::linearized: next[a] = arc_parameter_[a] * h; break;
    }
  }
  state.delta = std::move(next);
  ++state.iteration;
}

MessageState FloodingEngine::run(std::span<const double> gamma, int iterations) const {
  if (iterations < 0) throw std::invalid_argument("iteration count must be non-negative");
  MessageState state = MessageState::zero(*topology_, algorithm_);
  for (int l = 0; l < iterations; ++l) step(state, gamma);
  return state;
}

std::vector<double> FloodingEngine::decision_variables(std::span<const double> gamma, int iterations) const {
  return mpfusion::decision_variables(run(gamma, iterations), *topology_, gamma);
}

MessageState sumprod_step(const MessageState& state, const Topology& topology, const MrfParams& params,
                          std::span<const double> gamma, CouplingConvention convention) {
  MessageState next = state;
  FloodingEngine::discrete(topology, params, Algorithm::sum_product, convention).step(next, gamma);
  return next;
}

MessageState maxprod_step_discrete(const MessageState& state, const Topology& topology, const MrfParams& params,
                                   std::span<const double> gamma, CouplingConvention convention) {
  MessageState next = state;
  FloodingEngine::discrete(topology, params, Algorithm::max_product, convention).step(next, gamma);
  return next;
}

MessageState linear_step(const MessageState& state, const Topology& topology, std::span<const double> coefficients,
                         std::span<const double> gamma) {
  MessageState next = state;
  FloodingEngine::linear(topology, {coefficients.begin(), coefficients.end()}).step(next, gamma);
  return next;
}

std::vector<double> decision_variables(const MessageState& state, const Topology& topology,
                                       std::span<const double> gamma) {
  check_gamma(topology, gamma);
  std::vector<double> lambda(gamma.begin(), gamma.end());
  for (int j = 0; j < topology.node_count(); ++j)
    for (int in : topology.incoming_arcs(j)) lambda[j] += state.delta[static_cast<std::size_t>(in)];
  return lambda;
}

std::vector<int> decide(std::span<const double> lambda, std::span<const double> tau) {
  if (lambda.size() != tau.size()) throw std::invalid_argument("decide: lambda and tau lengths differ");
  std::vector<int> out(lambda.size());
  for (std::size_t j = 0; j < lambda.size(); ++j) out[j] = lambda[j] > tau[j] ? 1 : -1;
  return out;
}

LogSumExpGap logsumexp_max_gap(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("logsumexp of an empty list");
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  const double gap = std::log(sum);
  return {top + gap, top, gap};
}

}  // namespace mpfusion
