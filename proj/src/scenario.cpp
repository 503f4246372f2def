#include "mpfusion/scenario.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mpfusion/kernels.hpp"
#include "mpfusion/parallel.hpp"

namespace mpfusion {

ScenarioConfig ScenarioConfig::benchmark() {
  ScenarioConfig c;
  c.coverage = {{0, 0, 1}, {0, 1, 0}, {0, 2, -1}, {1, 2, 0}, {1, 3, -1}, {1, 4, 1}};
  return c;
}

double ScenarioConfig::delta_rho() const {
  return dispersion_rule == DispersionRule::fixed ? delta_rho_db : dispersion_factor * rho_db;
}

void ScenarioConfig::validate() const {
  const int n = node_count();
  if (pu_count < 1 || pu_count > 16) throw std::invalid_argument("pu_count must lie in 1..16");
  if (samples_per_slot < 1) throw std::invalid_argument("samples_per_slot must be >= 1");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise_variance must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (training_slots < 1) throw std::invalid_argument("training_slots must be >= 1");
  if (!std::isfinite(rho_db) || !std::isfinite(delta_rho())) throw std::invalid_argument("SNR must be finite");

  std::vector<std::vector<bool>> seen(static_cast<std::size_t>(n), std::vector<bool>(pu_count, false));
  for (const Coverage& c : coverage) {
    if (c.pu < 0 || c.pu >= pu_count) throw std::invalid_argument("coverage refers to PU " + std::to_string(c.pu + 1));
    if (c.node < 0 || c.node >= n) throw std::invalid_argument("coverage refers to node " + std::to_string(c.node + 1));
    if (seen[c.node][c.pu]) throw std::invalid_argument("duplicate coverage entry");
    seen[c.node][c.pu] = true;
  }
  for (int j = 0; j < n; ++j)
    if (std::none_of(seen[j].begin(), seen[j].end(), [](bool b) { return b; }))
      throw std::invalid_argument("node " + std::to_string(j + 1) + " is not covered by any PU");

  const ActivityProcess& a = activity;
  if (static_cast<int>(a.on_probability.size()) != pu_count)
    throw std::invalid_argument("one on-probability per PU expected");
  for (double p : a.on_probability)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("on-probability must lie in [0, 1]");
  if (!(a.refresh_probability >= 0.0 && a.refresh_probability <= 1.0))
    throw std::invalid_argument("refresh probability must lie in [0, 1]");
  if (!(a.correlation >= -1.0 && a.correlation <= 1.0))
    throw std::invalid_argument("correlation must lie in [-1, 1]");
  if (a.correlation < 0.0 && pu_count != 2)
    throw std::invalid_argument("negative correlation is defined for exactly two PUs");
  if (!a.forced.empty() && static_cast<int>(a.forced.size()) != pu_count)
    throw std::invalid_argument("forced states must list every PU");
}

std::vector<SnrEntry> snr_assignment(const ScenarioConfig& config) {
  config.validate();
  std::vector<SnrEntry> out;
  for (const Coverage& c : config.coverage) {
    const double db = config.rho_db + c.multiplier * config.delta_rho();
    out.push_back({c.node, c.pu, db, std::pow(10.0, db / 10.0)});
  }
  std::sort(out.begin(), out.end(), [](const SnrEntry& a, const SnrEntry& b) {
    return a.node != b.node ? a.node < b.node : a.pu < b.pu;
  });
  return out;
}

namespace {

void apply_forced(std::vector<int>& state, const ActivityProcess& process) {
  for (std::size_t p = 0; p < process.forced.size() && p < state.size(); ++p)
    if (process.forced[p]) state[p] = *process.forced[p] ? 1 : 0;
}

}  // namespace

std::vector<int> pu_process_step(const std::vector<int>& state, const ActivityProcess& process, CounterRng& rng) {
  const std::size_t pus = process.on_probability.size();
  if (!state.empty() && state.size() != pus) throw std::invalid_argument("activity state has the wrong size");
  std::vector<int> next = state;
  if (state.empty() || rng.uniform() < process.refresh_probability) {
    next.assign(pus, 0);
    if (rng.uniform() < std::abs(process.correlation)) {
      const double u = rng.uniform();
      for (std::size_t p = 0; p < pus; ++p) {
        const double w = process.correlation < 0.0 && p == 1 ? 1.0 - u : u;
        next[p] = w < process.on_probability[p] ? 1 : 0;
      }
    } else {
      for (std::size_t p = 0; p < pus; ++p) next[p] = rng.uniform() < process.on_probability[p] ? 1 : 0;
    }
  }
  apply_forced(next, process);
  return next;
}

std::vector<double> stationary_activity(const ActivityProcess& process, int pu_count) {
  if (static_cast<int>(process.on_probability.size()) != pu_count)
    throw std::invalid_argument("one on-probability per PU expected");
  const std::size_t states = std::size_t{1} << pu_count;
  auto index_of = [&](std::vector<int> s) {
    apply_forced(s, process);
    std::size_t index = 0;
    for (int p = 0; p < pu_count; ++p)
      if (s[p]) index |= std::size_t{1} << p;
    return index;
  };

  std::vector<double> out(states, 0.0);
  const double shared = std::abs(process.correlation);
  // Shared draw: the state is piecewise constant in U between breakpoints.
  std::vector<double> cuts{0.0, 1.0};
  for (int p = 0; p < pu_count; ++p) {
    const double pi = process.on_probability[p];
    cuts.push_back(process.correlation < 0.0 && p == 1 ? 1.0 - pi : pi);
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double width = cuts[i + 1] - cuts[i];
    if (width <= 0.0) continue;
    const double u = 0.5 * (cuts[i] + cuts[i + 1]);
    std::vector<int> s(static_cast<std::size_t>(pu_count));
    for (int p = 0; p < pu_count; ++p) {
      const double w = process.correlation < 0.0 && p == 1 ? 1.0 - u : u;
      s[p] = w < process.on_probability[p] ? 1 : 0;
    }
    out[index_of(s)] += shared * width;
  }
  for (std::size_t index = 0; index < states; ++index) {
    double prob = 1.0 - shared;
    std::vector<int> s(static_cast<std::size_t>(pu_count));
    for (int p = 0; p < pu_count; ++p) {
      s[p] = (index >> p) & 1u;
      prob *= s[p] ? process.on_probability[p] : 1.0 - process.on_probability[p];
    }
    out[index_of(s)] += prob;
  }
  return out;
}

std::vector<int> hypotheses(const ScenarioConfig& config, const std::vector<int>& activity) {
  std::vector<int> x(static_cast<std::size_t>(config.node_count()), -1);
  for (const Coverage& c : config.coverage)
    if (activity.at(static_cast<std::size_t>(c.pu))) x[c.node] = 1;
  return x;
}

std::vector<double> walsh(int index, int length) {
  std::vector<double> out(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) out[i] = std::popcount(static_cast<unsigned>(i & index)) % 2 ? -1.0 : 1.0;
  return out;
}

SignalBank::SignalBank(const ScenarioConfig& config) : samples_(config.samples_per_slot) {
  const int n = config.node_count();
  per_pu_.assign(static_cast<std::size_t>(n), std::vector<std::vector<double>>(config.pu_count));
  reference_.assign(static_cast<std::size_t>(n), std::vector<double>(samples_, 0.0));
  for (const SnrEntry& e : snr_assignment(config)) {
    auto wave = walsh(e.pu + 1, samples_);
    const double amplitude = std::sqrt(e.linear * config.noise_variance);
    for (double& w : wave) w *= amplitude;
    for (int i = 0; i < samples_; ++i) reference_[e.node][i] += wave[i];
    per_pu_[e.node][e.pu] = std::move(wave);
  }
}

std::vector<double> SignalBank::received(int node, const std::vector<int>& activity) const {
  std::vector<double> out(static_cast<std::size_t>(samples_), 0.0);
  const auto& waves = per_pu_.at(static_cast<std::size_t>(node));
  for (std::size_t p = 0; p < waves.size(); ++p) {
    if (waves[p].empty() || !activity.at(p)) continue;
    for (int i = 0; i < samples_; ++i) out[i] += waves[p][i];
  }
  return out;
}

double SignalBank::reference_energy(int node) const { return kernels::sum_squares(reference(node)); }

std::vector<double> SignalBank::reference_energies() const {
  std::vector<double> out;
  for (std::size_t j = 0; j < reference_.size(); ++j) out.push_back(reference_energy(static_cast<int>(j)));
  return out;
}

StateMixture world_mixture(const ScenarioConfig& config) {
  config.validate();
  const SignalBank bank(config);
  const std::vector<double> stationary = stationary_activity(config.activity, config.pu_count);
  StateMixture out;
  for (std::size_t index = 0; index < stationary.size(); ++index) {
    if (stationary[index] <= 0.0) continue;
    std::vector<int> activity(static_cast<std::size_t>(config.pu_count));
    for (int p = 0; p < config.pu_count; ++p) activity[p] = (index >> p) & 1u;
    WorldState w;
    w.probability = stationary[index];
    w.x = hypotheses(config, activity);
    for (int j = 0; j < config.node_count(); ++j) {
      const LlrMoments m = llr_moments(config.sensing, bank.reference(j), bank.received(j, activity),
                                       config.noise_variance, config.alpha);
      w.mean.push_back(m.mean);
      w.variance.push_back(m.variance);
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<SlotRecord> run_campaign(const ScenarioConfig& config, std::int64_t slots, std::uint64_t seed,
                                     std::uint64_t campaign, int threads) {
  config.validate();
  if (slots < 1) throw std::invalid_argument("campaign needs at least one slot");
  const SignalBank bank(config);
  std::vector<SlotRecord> out(static_cast<std::size_t>(slots));

  CounterRng activity_rng(seed, derive_stream({campaign, static_cast<std::uint64_t>(StreamPurpose::activity)}));
  std::vector<int> state;
  for (std::int64_t t = 0; t < slots; ++t) {
    state = pu_process_step(state, config.activity, activity_rng);
    out[t].t = t;
    out[t].pu = state;
    out[t].x = hypotheses(config, state);
  }

  const int n = config.node_count();
  const int k = config.samples_per_slot;
  const double sigma = std::sqrt(config.noise_variance);
  const double offset = config.sensing == SensingMode::energy
                            ? energy_offset(k, config.noise_variance, config.alpha)
                            : 0.0;
  parallel_for(slots, threads, [&](std::int64_t begin, std::int64_t end) {
    const auto& kt = kernels::active();
    std::vector<double> noise(static_cast<std::size_t>(k));
    std::vector<double> y(static_cast<std::size_t>(k));
    for (std::int64_t t = begin; t < end; ++t) {
      CounterRng rng(seed, derive_stream({campaign, static_cast<std::uint64_t>(StreamPurpose::generic),
                                          static_cast<std::uint64_t>(t)}));
      SlotRecord& r = out[t];
      r.gamma.resize(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) {
        const std::vector<double> s = bank.received(j, r.pu);
        rng.fill_normal(noise);
        kt.scale_add(y.data(), s.data(), 1.0, noise.data(), sigma, y.size());
        if (config.sensing == SensingMode::coherent) {
          const auto& ref = bank.reference(j);
          r.gamma[j] = kt.dot(ref.data(), y.data(), y.size()) - 0.5 * kt.sum_squares(ref.data(), ref.size());
        } else {
          r.gamma[j] = kt.sum_squares(y.data(), y.size()) / k - offset;
        }
      }
    }
  });
  return out;
}

}  // namespace mpfusion
