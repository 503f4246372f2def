#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpfusion/rng.hpp"

namespace mpfusion {

enum class SensingMode { coherent, energy };

/// Upper-tail standard normal probability Q(t) = P{Z > t}.
double q_function(double t);
/// Inverse of q_function on (0, 1).
double q_inverse(double p);
/// Standard normal CDF, 1 - Q(t) computed without cancellation.
inline double normal_cdf(double t) { return q_function(-t); }

/// Per-node deterministic signal s_j observed in white Gaussian noise.
struct SignalProfile {
  std::vector<std::vector<double>> waveforms;
  double noise_variance = 1.0;

  /// s_j(i) = sqrt(snr_j * sigma^2), so E_j / (K sigma^2) = snr_j.
  static SignalProfile constant_amplitude(std::span<const double> snr_linear, int samples_per_slot,
                                          double noise_variance = 1.0);

  int node_count() const { return static_cast<int>(waveforms.size()); }
  int samples_per_slot() const { return waveforms.empty() ? 0 : static_cast<int>(waveforms.front().size()); }
  double energy(int node) const;
};

/// y_j = xi_j s_j + nu_j with xi_j = (x_j + 1) / 2 and nu_j ~ N(0, sigma^2 I).
std::vector<std::vector<double>> gen_observations(std::span<const int> x, const SignalProfile& profile,
                                                  CounterRng& rng);

/// Matched-filter LLR s^T y - E / 2 (unit noise variance).
double llr_matched(std::span<const double> y, std::span<const double> s);

/// Energy-detector offset tau_0 = sigma^2 (1 + sqrt(2 / K) Q^{-1}(alpha)).
double energy_offset(int samples_per_slot, double noise_variance, double alpha);

/// Energy-detector statistic ||y||^2 / K - tau_0.
double llr_energy(std::span<const double> y, int samples_per_slot, double noise_variance, double alpha);

/// Non-empty when K is too small for the normal approximation of the energy statistic.
std::optional<std::string> energy_detector_warning(int samples_per_slot);

struct LlrMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Conditional mean/variance of the local statistic when `received` is the
/// noiseless signal actually present. The matched filter correlates against
/// `reference`; the energy detector uses the CLT moments of ||y||^2 / K.
LlrMoments llr_moments(SensingMode mode, std::span<const double> reference, std::span<const double> received,
                       double noise_variance, double alpha);

}  // namespace mpfusion
