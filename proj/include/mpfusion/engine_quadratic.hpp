#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <vector>

#include "mpfusion/graph.hpp"
#include "mpfusion/rng.hpp"

namespace mpfusion {

/// Local log-likelihood used by the continuous relaxation.
///
/// `exact`: ln phi(x) = -(E/8) x^2 + (gamma/2) x, from the Gaussian model with
/// xi = (x + 1) / 2 and gamma = s^T y - E/2.
/// `paper`: ln phi(x) = -(E/4) x^2 + (gamma - E/2) x, whose stationary point
/// gives u = 2 gamma / E - 1, v = 2 J / E.
enum class QuadConvention { exact, paper };

/// Thrown when the aggregate quadratic at a node is not strictly concave.
class ConcavityError : public std::runtime_error {
 public:
  explicit ConcavityError(int node);
  int node() const { return node_; }

 private:
  int node_;
};

struct AffineEstimate {
  double u = 0.0;
  double v = 0.0;
};

/// m(x) = a x^2 + b x; the constant term is dropped.
struct QuadMessage {
  double a = 0.0;
  double b = 0.0;
};

struct LocalQuadratic {
  double curvature;
  double slope;
};

LocalQuadratic local_quadratic(double gamma, double energy, QuadConvention convention);
/// d slope / d gamma for the convention (1/2 exact, 1 paper).
double slope_gain(QuadConvention convention);

/// `exponent` is the coefficient of x_k x_j in ln psi (see pairwise_exponent).
AffineEstimate init_affine(double gamma, double energy, double exponent, QuadConvention convention);

/// Stationary point u + v x_j of ln phi_k + exponent x_k x_j + sum of incoming
/// messages. `node` is reported if the aggregate is not concave.
AffineEstimate affine_step(double gamma, double energy, double exponent, std::span<const QuadMessage> incoming,
                           QuadConvention convention, int node = -1);

/// Coefficients of x_j -> max over x_k, obtained by substituting x_k = u + v x_j
/// into the same objective and expanding.
QuadMessage quad_from_affine(AffineEstimate estimate, double gamma, double energy, double exponent,
                             std::span<const QuadMessage> incoming, QuadConvention convention, int node = -1);

/// Everything the continuous engine needs besides gamma.
struct QuadInstance {
  Topology topology;
  std::vector<double> couplings;  // per edge, as configured
  std::vector<double> energies;   // per node
  QuadConvention convention = QuadConvention::exact;
  CouplingConvention coupling_convention = CouplingConvention::merged;

  double exponent(int edge) const;
  void validate() const;
};

struct QuadState {
  int iteration = 0;
  std::vector<AffineEstimate> affine;  // per arc
  std::vector<QuadMessage> messages;   // per arc
};

QuadState quad_run(const QuadInstance& instance, std::span<const double> gamma, int iterations);

/// lambda_j = gamma_j + sum_k 2 b_{k->j}.
std::vector<double> decision_variables_cont(const QuadInstance& instance, const QuadState& state,
                                            std::span<const double> gamma);
std::vector<double> quad_decision_variables(const QuadInstance& instance, std::span<const double> gamma,
                                            int iterations);

/// lambda = weights * gamma + offset.
struct FusionWeights {
  Eigen::MatrixXd weights;
  Eigen::VectorXd offset;
  int iteration = 0;

  Eigen::VectorXd apply(std::span<const double> gamma) const;
  static FusionWeights identity(int node_count);
};

FusionWeights extract_weights(const QuadInstance& instance, int iterations);

/// Largest |lambda(gamma) - (W gamma + w0)| over `trials` random gamma vectors
/// with entries N(0, scale^2).
double verify_linearity(const QuadInstance& instance, const FusionWeights& weights, int trials, CounterRng& rng,
                        double scale = 10.0);

/// For each energy in the sweep (assigned to node k), |d u_kj^(2) / d gamma_n|
/// for n in neighbors(k) \ {j}, in ascending n. Empty when k has no such neighbor.
std::vector<std::vector<double>> mrc_monotonicity_probe(const QuadInstance& instance, int k, int j,
                                                        std::span<const double> energies);

}  // namespace mpfusion
