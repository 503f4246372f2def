#include "mpfusion/engine_quadratic.hpp"

#include <cmath>
#include <string>

namespace mpfusion {

ConcavityError::ConcavityError(int node)
    : std::runtime_error("coupling too strong for continuous relaxation: aggregate curvature at node " +
                         std::to_string(node + 1) + " is not negative"),
      node_(node) {}

LocalQuadratic local_quadratic(double gamma, double energy, QuadConvention convention) {
  if (!(energy > 0.0)) throw std::invalid_argument("node energy must be positive");
  if (convention == QuadConvention::exact) return {-energy / 8.0, 0.5 * gamma};
  return {-energy / 4.0, gamma - 0.5 * energy};
}

double slope_gain(QuadConvention convention) { return convention == QuadConvention::exact ? 0.5 : 1.0; }

namespace {

LocalQuadratic aggregate(double gamma, double energy, std::span<const QuadMessage> incoming,
                         QuadConvention convention, int node) {
  LocalQuadratic q = local_quadratic(gamma, energy, convention);
  for (const QuadMessage& m : incoming) {
    q.curvature += m.a;
    q.slope += m.b;
  }
  if (!(q.curvature < 0.0)) throw ConcavityError(node);
  return q;
}

}  // namespace

AffineEstimate init_affine(double gamma, double energy, double exponent, QuadConvention convention) {
  return affine_step(gamma, energy, exponent, {}, convention);
}

AffineEstimate affine_step(double gamma, double energy, double exponent, std::span<const QuadMessage> incoming,
                           QuadConvention convention, int node) {
  const LocalQuadratic q = aggregate(gamma, energy, incoming, convention, node);
  return {-q.slope / (2.0 * q.curvature), -exponent / (2.0 * q.curvature)};
}

QuadMessage quad_from_affine(AffineEstimate e, double gamma, double energy, double exponent,
                             std::span<const QuadMessage> incoming, QuadConvention convention, int node) {
  const LocalQuadratic q = aggregate(gamma, energy, incoming, convention, node);
  // A (u + v x)^2 + B (u + v x) + J (u + v x) x, collected in powers of x.
  return {q.curvature * e.v * e.v + exponent * e.v,
          2.0 * q.curvature * e.u * e.v + q.slope * e.v + exponent * e.u};
}

double QuadInstance::exponent(int edge) const {
  return pairwise_exponent(couplings.at(static_cast<std::size_t>(edge)), coupling_convention);
}

void QuadInstance::validate() const {
  if (couplings.size() != topology.edges().size())
    throw std::invalid_argument("expected one coupling per edge");
  if (static_cast<int>(energies.size()) != topology.node_count())
    throw std::invalid_argument("expected one energy per node");
  for (double e : energies)
    if (!(e > 0.0)) throw std::invalid_argument("node energy must be positive");
}

QuadState quad_run(const QuadInstance& instance, std::span<const double> gamma, int iterations) {
  instance.validate();
  const Topology& g = instance.topology;
  if (static_cast<int>(gamma.size()) != g.node_count())
    throw std::invalid_argument("LLR vector length does not match node count");
  if (iterations < 0) throw std::invalid_argument("iteration count must be non-negative");

  const auto& arcs = g.arcs();
  QuadState state;
  state.affine.assign(arcs.size(), {});
  state.messages.assign(arcs.size(), {});
  std::vector<QuadMessage> next(arcs.size());
  std::vector<QuadMessage> incoming;
  for (int l = 1; l <= iterations; ++l) {
    for (std::size_t a = 0; a < arcs.size(); ++a) {
      const Arc& arc = arcs[a];
      const int k = arc.from;
      incoming.clear();
      for (int in : g.incoming_arcs(k))
        if (arcs[in].from != arc.to) incoming.push_back(state.messages[in]);
      const double j = instance.exponent(arc.edge);
      const AffineEstimate e = affine_step(gamma[k], instance.energies[k], j, incoming, instance.convention, k);
      state.affine[a] = e;
      next[a] = quad_from_affine(e, gamma[k], instance.energies[k], j, incoming, instance.convention, k);
    }
    state.messages.swap(next);
    state.iteration = l;
  }
  return state;
}

std::vector<double> decision_variables_cont(const QuadInstance& instance, const QuadState& state,
                                            std::span<const double> gamma) {
  const Topology& g = instance.topology;
  std::vector<double> lambda(gamma.begin(), gamma.end());
  for (int j = 0; j < g.node_count(); ++j)
    for (int in : g.incoming_arcs(j)) lambda[j] += 2.0 * state.messages[static_cast<std::size_t>(in)].b;
  return lambda;
}

std::vector<double> quad_decision_variables(const QuadInstance& instance, std::span<const double> gamma,
                                            int iterations) {
  return decision_variables_cont(instance, quad_run(instance, gamma, iterations), gamma);
}

Eigen::VectorXd FusionWeights::apply(std::span<const double> gamma) const {
  const Eigen::Map<const Eigen::VectorXd> g(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
  return weights * g + offset;
}

FusionWeights FusionWeights::identity(int node_count) {
  return {Eigen::MatrixXd::Identity(node_count, node_count), Eigen::VectorXd::Zero(node_count), 0};
}

FusionWeights extract_weights(const QuadInstance& instance, int iterations) {
  const int n = instance.topology.node_count();
  std::vector<double> probe(static_cast<std::size_t>(n), 0.0);
  const std::vector<double> base = quad_decision_variables(instance, probe, iterations);

  FusionWeights out;
  out.iteration = iterations;
  out.offset = Eigen::Map<const Eigen::VectorXd>(base.data(), n);
  out.weights.resize(n, n);
  for (int i = 0; i < n; ++i) {
    probe[i] = 1.0;
    const std::vector<double> column = quad_decision_variables(instance, probe, iterations);
    probe[i] = 0.0;
    for (int j = 0; j < n; ++j) out.weights(j, i) = column[j] - base[j];
  }
  return out;
}

double verify_linearity(const QuadInstance& instance, const FusionWeights& weights, int trials, CounterRng& rng,
                        double scale) {
  const int n = instance.topology.node_count();
  std::vector<double> gamma(static_cast<std::size_t>(n));
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    for (double& g : gamma) g = scale * rng.normal();
    const std::vector<double> lambda = quad_decision_variables(instance, gamma, weights.iteration);
    const Eigen::VectorXd predicted = weights.apply(gamma);
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(lambda[j] - predicted[j]));
  }
  return worst;
}

std::vector<std::vector<double>> mrc_monotonicity_probe(const QuadInstance& instance, int k, int j,
                                                        std::span<const double> energies) {
  instance.validate();
  const Topology& g = instance.topology;
  g.arc_index(k, j);
  const std::vector<int> others = g.neighbors_except(k, j);
  std::vector<std::vector<double>> out;
  if (others.empty()) return out;

  // u_kj^(2) = -B / (2A) with A independent of gamma, and the first-iteration
  // message b_{n->k} = B_n v_{nk} has d/d gamma_n = slope_gain * v_{nk}.
  const double gain = slope_gain(instance.convention);
  std::vector<QuadMessage> incoming;
  std::vector<double> slopes;
  for (int n : others) {
    const double exponent = instance.exponent(*g.edge_index(n, k));
    const AffineEstimate e = init_affine(0.0, instance.energies[n], exponent, instance.convention);
    incoming.push_back(quad_from_affine(e, 0.0, instance.energies[n], exponent, {}, instance.convention, n));
    slopes.push_back(gain * e.v);
  }
  for (double energy : energies) {
    const double curvature = aggregate(0.0, energy, incoming, instance.convention, k).curvature;
    std::vector<double> row;
    for (double s : slopes) row.push_back(std::abs(s) / std::abs(2.0 * curvature));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace mpfusion
