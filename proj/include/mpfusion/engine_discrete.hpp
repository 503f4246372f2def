#pragma once

#include <span>
#include <vector>

#include "mpfusion/graph.hpp"

namespace mpfusion {

enum class Algorithm { max_product, sum_product, linearized };

/// Directed-edge message LLRs, indexed like Topology::arcs().
struct MessageState {
  Algorithm algorithm = Algorithm::max_product;
  int iteration = 0;
  std::vector<double> delta;

  static MessageState zero(const Topology& topology, Algorithm algorithm);
};

/// S(a, b) = ln((1 + e^{a+b}) / (e^a + e^b)).
double s_transfer(double a, double b);

/// (e^{2J} - 1) / (1 + e^J)^2, evaluated as tanh(J / 2).
double coefficient_from_coupling(double coupling);

/// Per-arc effective couplings J_eff for the discrete updates.
std::vector<double> arc_couplings(const Topology& topology, const MrfParams& params, CouplingConvention convention);

MessageState sumprod_step(const MessageState& state, const Topology& topology, const MrfParams& params,
                          std::span<const double> gamma, CouplingConvention convention = CouplingConvention::merged);
MessageState maxprod_step_discrete(const MessageState& state, const Topology& topology, const MrfParams& params,
                                   std::span<const double> gamma,
                                   CouplingConvention convention = CouplingConvention::merged);
/// `coefficients[a]` multiplies the message on arc a (c_jk for arc k -> j).
MessageState linear_step(const MessageState& state, const Topology& topology, std::span<const double> coefficients,
                         std::span<const double> gamma);

std::vector<double> decision_variables(const MessageState& state, const Topology& topology,
                                       std::span<const double> gamma);

/// +1 iff lambda_j > tau_j.
std::vector<int> decide(std::span<const double> lambda, std::span<const double> tau);

struct LogSumExpGap {
  double exact;
  double approx;
  double gap;
};
LogSumExpGap logsumexp_max_gap(std::span<const double> values);

/// Pre-resolved flooding runner. `arc_parameter` holds J_eff per arc for the
/// max-product and sum-product variants and c per arc for the linearized one.
class FloodingEngine {
 public:
  FloodingEngine(const Topology& topology, Algorithm algorithm, std::vector<double> arc_parameter);

  static FloodingEngine discrete(const Topology& topology, const MrfParams& params, Algorithm algorithm,
                                 CouplingConvention convention);
  static FloodingEngine linear(const Topology& topology, std::vector<double> coefficients);

  void step(MessageState& state, std::span<const double> gamma) const;
  MessageState run(std::span<const double> gamma, int iterations) const;
  std::vector<double> decision_variables(std::span<const double> gamma, int iterations) const;

  const Topology& topology() const { return *topology_; }
  Algorithm algorithm() const { return algorithm_; }

 private:
  const Topology* topology_;
  Algorithm algorithm_;
  std::vector<double> arc_parameter_;
};

}  // namespace mpfusion
