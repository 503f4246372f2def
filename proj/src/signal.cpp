#include "mpfusion/signal.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mpfusion/kernels.hpp"

namespace mpfusion {

double q_function(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }

namespace {

// Acklam's rational approximation of the normal quantile, relative error
// below 1.2e-9, followed by one Halley step against erfc.
double normal_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;

  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  for (int step = 0; step < 2; ++step) {
    // Work on the smaller tail so the residual keeps its relative precision.
    const double e = x < 0.0 ? q_function(-x) - p : (1.0 - p) - q_function(x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace

double q_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("q_inverse requires 0 < p < 1");
  if (p == 0.5) return 0.0;
  // Q(t) = p  <=>  Phi(-t) = p; solve in whichever tail keeps p small.
  return p < 0.5 ? -normal_quantile(p) : normal_quantile(1.0 - p);
}

SignalProfile SignalProfile::constant_amplitude(std::span<const double> snr_linear, int samples_per_slot,
                                                double noise_variance) {
  if (samples_per_slot < 1) throw std::invalid_argument("samples_per_slot must be >= 1");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");
  SignalProfile profile;
  profile.noise_variance = noise_variance;
  for (double snr : snr_linear) {
    if (!(snr >= 0.0)) throw std::invalid_argument("SNR must be non-negative");
    profile.waveforms.emplace_back(static_cast<std::size_t>(samples_per_slot), std::sqrt(snr * noise_variance));
  }
  return profile;
}

double SignalProfile::energy(int node) const { return kernels::sum_squares(waveforms.at(static_cast<std::size_t>(node))); }

std::vector<std::vector<double>> gen_observations(std::span<const int> x, const SignalProfile& profile,
                                                  CounterRng& rng) {
  if (static_cast<int>(x.size()) != profile.node_count())
    throw std::invalid_argument("hypothesis vector length does not match the signal profile");
  const double sigma = std::sqrt(profile.noise_variance);
  const auto& k = kernels::active();
  std::vector<std::vector<double>> y(x.size());
  std::vector<double> noise;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] != 1 && x[j] != -1) throw std::invalid_argument("hypothesis entries must be -1 or +1");
    const auto& s = profile.waveforms[j];
    noise.resize(s.size());
    rng.fill_normal(noise);
    y[j].resize(s.size());
    const double xi = 0.5 * (x[j] + 1);
    k.scale_add(y[j].data(), s.data(), xi, noise.data(), sigma, s.size());
  }
  return y;
}

double llr_matched(std::span<const double> y, std::span<const double> s) {
  if (y.size() != s.size()) throw std::invalid_argument("matched filter: observation and template lengths differ");
  const auto& k = kernels::active();
  return k.dot(s.data(), y.data(), s.size()) - 0.5 * k.sum_squares(s.data(), s.size());
}

double energy_offset(int samples_per_slot, double noise_variance, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("energy detector: alpha must lie in (0, 1)");
  if (samples_per_slot < 1) throw std::invalid_argument("energy detector: K must be >= 1");
  return noise_variance * (1.0 + std::sqrt(2.0 / samples_per_slot) * q_inverse(alpha));
}

double llr_energy(std::span<const double> y, int samples_per_slot, double noise_variance, double alpha) {
  const double offset = energy_offset(samples_per_slot, noise_variance, alpha);
  return kernels::sum_squares(y) / samples_per_slot - offset;
}

std::optional<std::string> energy_detector_warning(int samples_per_slot) {
  if (samples_per_slot >= 30) return std::nullopt;
  return "energy detector with K = " + std::to_string(samples_per_slot) +
         " samples; the normal approximation of the statistic is poor below K = 30";
}

LlrMoments llr_moments(SensingMode mode, std::span<const double> reference, std::span<const double> received,
                       double noise_variance, double alpha) {
  if (reference.size() != received.size()) throw std::invalid_argument("llr_moments: length mismatch");
  if (mode == SensingMode::coherent) {
    const double energy = kernels::sum_squares(reference);
    return {kernels::dot(reference, received) - 0.5 * energy, noise_variance * energy};
  }
  const auto k = static_cast<double>(received.size());
  const double energy = kernels::sum_squares(received);
  const double offset = energy_offset(static_cast<int>(received.size()), noise_variance, alpha);
  return {noise_variance + energy / k - offset,
          (2.0 * k * noise_variance * noise_variance + 4.0 * noise_variance * energy) / (k * k)};
}

}  // namespace mpfusion
