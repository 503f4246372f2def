#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mpfusion/graph.hpp"
#include "mpfusion/performance.hpp"
#include "mpfusion/rng.hpp"
#include "mpfusion/signal.hpp"

namespace mpfusion {

/// PU `pu` reaches `node` at rho + multiplier * delta_rho dB (both 0-based).
struct Coverage {
  int pu;
  int node;
  int multiplier;
};

enum class DispersionRule { fixed, proportional };

/// Correlated on/off activity of the primary transmitters.
///
/// Every slot, with probability `refresh_probability`, the activity vector is
/// redrawn; otherwise it is kept. A redraw uses, with probability |correlation|,
/// one shared uniform U (PU p is on iff U < on_probability[p]; with a negative
/// correlation and two PUs the second uses 1 - U), and independent draws
/// otherwise. The first slot is a redraw, so the stationary law holds from t = 0.
struct ActivityProcess {
  std::vector<double> on_probability{0.5, 0.5};
  double refresh_probability = 0.2;
  double correlation = 0.5;
  std::vector<std::optional<bool>> forced{std::nullopt, std::nullopt};
};

struct ScenarioConfig {
  Topology topology = Topology::chain(5);
  int pu_count = 2;
  std::vector<Coverage> coverage;
  double rho_db = -5.0;
  double delta_rho_db = 1.0;
  DispersionRule dispersion_rule = DispersionRule::fixed;
  double dispersion_factor = 0.1;
  int samples_per_slot = 100;
  double noise_variance = 1.0;
  double alpha = 0.1;
  int training_slots = 2500;
  SensingMode sensing = SensingMode::coherent;
  ActivityProcess activity;

  /// Five nodes on a chain, PU1 -> nodes 1..3, PU2 -> nodes 3..5.
  static ScenarioConfig benchmark();

  int node_count() const { return topology.node_count(); }
  double delta_rho() const;
  void validate() const;
};

struct SnrEntry {
  int node;
  int pu;
  double db;
  double linear;
};

std::vector<SnrEntry> snr_assignment(const ScenarioConfig& config);

/// Next activity vector (0/1 per PU); an empty `state` requests the initial draw.
std::vector<int> pu_process_step(const std::vector<int>& state, const ActivityProcess& process, CounterRng& rng);

/// Stationary probability of every activity vector; bit p of the index is PU p.
std::vector<double> stationary_activity(const ActivityProcess& process, int pu_count);

/// x_j = +1 iff a PU covering j is active.
std::vector<int> hypotheses(const ScenarioConfig& config, const std::vector<int>& activity);

/// Noiseless waveforms: per PU and node the received signal, per node the
/// matched-filter template (sum over covering PUs).
class SignalBank {
 public:
  explicit SignalBank(const ScenarioConfig& config);

  std::vector<double> received(int node, const std::vector<int>& activity) const;
  const std::vector<double>& reference(int node) const { return reference_[static_cast<std::size_t>(node)]; }
  double reference_energy(int node) const;
  std::vector<double> reference_energies() const;

 private:
  int samples_;
  std::vector<std::vector<std::vector<double>>> per_pu_;  // [node][pu] -> waveform, empty if not covering
  std::vector<std::vector<double>> reference_;
};

/// Walsh sequence (-1)^popcount(i & index); distinct indices are orthogonal
/// whenever the length is a multiple of the next power of two above them.
std::vector<double> walsh(int index, int length);

/// Every activity state with its probability, hypotheses and local LLR moments.
StateMixture world_mixture(const ScenarioConfig& config);

struct SlotRecord {
  std::int64_t t = 0;
  std::vector<int> pu;
  std::vector<int> x;
  std::vector<double> gamma;
};

/// Slots 0..slots-1 of the campaign identified by (seed, campaign). The
/// activity process runs sequentially; the noise of slot t comes from its own
/// stream, so the output does not depend on the thread count.
std::vector<SlotRecord> run_campaign(const ScenarioConfig& config, std::int64_t slots, std::uint64_t seed,
                                     std::uint64_t campaign, int threads = 1);

}  // namespace mpfusion
