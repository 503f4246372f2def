#include "mpfusion/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "mpfusion/parallel.hpp"

namespace mpfusion {

using nlohmann::json;

ExperimentSettings ExperimentSettings::from(const RunConfig& config) {
  ExperimentSettings s;
  s.scenario = config.scenario;
  s.methods = config.methods();
  s.options = config.detector_options();
  s.truth_labels = config.detector.training_labels == TrainingLabels::truth;
  s.trials = config.evaluation.trials;
  s.seed = config.seed;
  s.threads = config.threads;
  s.roc_taus = config.evaluation.roc_taus;
  return s;
}

const MethodOutcome& CellResult::method(const std::string& label) const {
  for (const auto& m : methods)
    if (m.spec.label() == label) return m;
  throw std::out_of_range("no result for method " + label);
}

std::uint64_t campaign_id(StreamPurpose purpose, const ScenarioConfig& s) {
  return derive_stream({static_cast<std::uint64_t>(purpose), std::bit_cast<std::uint64_t>(s.rho_db),
                        std::bit_cast<std::uint64_t>(s.delta_rho()), static_cast<std::uint64_t>(s.sensing)});
}

CsvTable campaign_table(const ScenarioConfig& scenario, const std::vector<SlotRecord>& records) {
  std::vector<std::string> header{"t"};
  for (int p = 0; p < scenario.pu_count; ++p) header.push_back("pu" + std::to_string(p + 1));
  for (int j = 0; j < scenario.node_count(); ++j) header.push_back("x" + std::to_string(j + 1));
  for (int j = 0; j < scenario.node_count(); ++j) header.push_back("gamma" + std::to_string(j + 1));
  CsvTable table(header);
  for (const SlotRecord& r : records) {
    table.cell(r.t);
    for (int v : r.pu) table.cell(v);
    for (int v : r.x) table.cell(v);
    for (double g : r.gamma) table.cell(g);
    table.end_row();
  }
  return table;
}

CsvTable weights_table(const Eigen::MatrixXd& weights, const Eigen::VectorXd& offset) {
  std::vector<std::string> header{"node"};
  for (Eigen::Index i = 0; i < weights.cols(); ++i) header.push_back("w" + std::to_string(i + 1));
  header.push_back("offset");
  CsvTable table(header);
  for (Eigen::Index j = 0; j < weights.rows(); ++j) {
    table.cell(static_cast<int>(j + 1));
    for (Eigen::Index i = 0; i < weights.cols(); ++i) table.cell(weights(j, i));
    table.cell(offset[j]);
    table.end_row();
  }
  return table;
}

CsvTable roc_table(const std::vector<RocPoint>& points) {
  CsvTable table({"node", "tau", "pf", "pd", "stderr_pf", "stderr_pd"});
  for (const RocPoint& p : points) {
    table.cell(p.node + 1).cell(p.tau).cell(p.pf).cell(p.pd).cell(p.stderr_pf).cell(p.stderr_pd);
    table.end_row();
  }
  return table;
}

namespace {

PerfTally tally(const Detector& detector, const std::vector<SlotRecord>& records, int threads) {
  const int n = detector.topology->node_count();
  const int workers = std::max(1, threads);
  std::vector<PerfTally> parts(static_cast<std::size_t>(workers), PerfTally(n));
  const auto count = static_cast<std::int64_t>(records.size());
  parallel_for(workers, workers, [&](std::int64_t w0, std::int64_t w1) {
    for (std::int64_t w = w0; w < w1; ++w) {
      const std::int64_t begin = count * w / workers;
      const std::int64_t end = count * (w + 1) / workers;
      for (std::int64_t t = begin; t < end; ++t)
        parts[w].add(records[t].x, detector.decide(records[t].gamma));
    }
  });
  PerfTally total(n);
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace

CellResult simulate_cell(const ExperimentSettings& settings) {
  const ScenarioConfig& scenario = settings.scenario;
  scenario.validate();
  if (settings.trials < 1) throw std::invalid_argument("trials must be positive");
  const int n = scenario.node_count();

  const StateMixture mixture = world_mixture(scenario);
  const auto training_records = run_campaign(scenario, scenario.training_slots, settings.seed,
                                             campaign_id(StreamPurpose::training, scenario), settings.threads);
  TrainingData training = TrainingData::from_records(training_records);
  if (settings.truth_labels) training.labels = training.truth;

  const bool nonlinear = std::any_of(settings.methods.begin(), settings.methods.end(),
                                     [](const MethodSpec& m) { return !m.is_linear(); });
  std::vector<SlotRecord> calibration;
  if (nonlinear)
    calibration = run_campaign(scenario, settings.trials, settings.seed,
                               campaign_id(StreamPurpose::calibration, scenario), settings.threads);
  const auto evaluation = run_campaign(scenario, settings.trials, settings.seed,
                                       campaign_id(StreamPurpose::evaluation, scenario), settings.threads);

  CellResult cell;
  cell.rho_db = scenario.rho_db;
  cell.delta_rho_db = scenario.delta_rho();
  cell.trials = settings.trials;
  for (const MethodSpec& spec : settings.methods) {
    Detector d = build_detector(spec, scenario, settings.options, training, mixture);
    MethodOutcome m;
    m.spec = spec;
    if (spec.is_linear()) {
      calibrate_linear(d, mixture, settings.options.far);
      const auto stats = linear_stats(d, mixture);
      for (int j = 0; j < n; ++j) {
        m.predicted_pf.push_back(gfun(d.thresholds[j], -1, stats[j]));
        m.predicted_pd.push_back(gfun(d.thresholds[j], 1, stats[j]));
      }
      m.weights = d.weights;
    } else {
      calibrate_empirical(d, calibration, settings.options.far);
      std::vector<std::vector<int>> x;
      std::vector<std::vector<double>> lambda(static_cast<std::size_t>(n));
      for (const SlotRecord& r : calibration) {
        x.push_back(r.x);
        const auto l = d.statistic(r.gamma);
        for (int j = 0; j < n; ++j) lambda[j].push_back(l[j]);
      }
      for (int j = 0; j < n; ++j) {
        const ConditionalStats s = empirical_conditional_stats(x, lambda[j], j);
        m.predicted_pf.push_back(gfun(d.thresholds[j], -1, s));
        m.predicted_pd.push_back(gfun(d.thresholds[j], 1, s));
      }
    }
    m.nodes = tally(d, evaluation, settings.threads).report();
    if (!settings.roc_taus.empty()) {
      std::vector<std::vector<int>> truth(static_cast<std::size_t>(n));
      std::vector<std::vector<double>> stat(static_cast<std::size_t>(n));
      for (const SlotRecord& r : evaluation) {
        const auto l = d.statistic(r.gamma);
        for (int j = 0; j < n; ++j) {
          truth[j].push_back(r.x[j]);
          stat[j].push_back(l[j]);
        }
      }
      for (int j = 0; j < n; ++j) {
        if (std::count(truth[j].begin(), truth[j].end(), 1) == 0 || std::count(truth[j].begin(), truth[j].end(), -1) == 0)
          continue;
        const auto points = empirical_roc(j, truth[j], stat[j], settings.roc_taus);
        m.roc.insert(m.roc.end(), points.begin(), points.end());
      }
    }
    m.average = average(m.nodes);
    m.thresholds = d.thresholds;
    m.couplings = d.couplings;
    m.coefficients = d.arc_coefficients;
    m.exceeds_contraction_bound = d.exceeds_contraction_bound;
    m.p2 = d.p2;
    m.p1 = d.p1;
    cell.methods.push_back(std::move(m));
  }
  return cell;
}

std::vector<CellResult> sweep_snr(const ExperimentSettings& settings, const std::vector<double>& rho_grid) {
  if (rho_grid.empty()) throw std::invalid_argument("SNR grid is empty");
  std::vector<CellResult> out;
  for (double rho : rho_grid) {
    ExperimentSettings s = settings;
    s.scenario.rho_db = rho;
    out.push_back(simulate_cell(s));
  }
  return out;
}

CsvTable perf_table() {
  return CsvTable({"method", "rho", "delta_rho", "node", "pf", "pd", "stderr_pf", "stderr_pd"});
}

void append_perf_rows(CsvTable& table, const CellResult& cell) {
  for (const MethodOutcome& m : cell.methods) {
    for (std::size_t j = 0; j < m.nodes.size(); ++j) {
      const NodePerf& p = m.nodes[j];
      table.cell(m.spec.label()).cell(cell.rho_db).cell(cell.delta_rho_db).cell(static_cast<int>(j + 1));
      table.cell(p.pf).cell(p.pd).cell(p.stderr_pf).cell(p.stderr_pd);
      table.end_row();
    }
  }
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

json cell_json(const CellResult& cell) {
  json methods = json::array();
  for (const MethodOutcome& m : cell.methods) {
    json nodes = json::array();
    for (std::size_t j = 0; j < m.nodes.size(); ++j) {
      const NodePerf& p = m.nodes[j];
      nodes.push_back({{"node", j + 1},
                       {"pf", optional_json(p.pf)},
                       {"pd", optional_json(p.pd)},
                       {"stderr_pf", p.stderr_pf},
                       {"stderr_pd", p.stderr_pd},
                       {"trials_absent", p.trials_absent},
                       {"trials_present", p.trials_present},
                       {"threshold", m.thresholds[j]},
                       {"predicted_pf", m.predicted_pf[j]},
                       {"predicted_pd", m.predicted_pd[j]}});
    }
    json entry = {{"method", m.spec.label()},
                  {"nodes", nodes},
                  {"average", {{"pf", optional_json(m.average.pf)},
                               {"pd", optional_json(m.average.pd)},
                               {"stderr_pf", m.average.stderr_pf},
                               {"stderr_pd", m.average.stderr_pd}}}};
    if (!m.couplings.empty()) entry["couplings"] = m.couplings;
    if (!m.coefficients.empty()) entry["arc_coefficients"] = m.coefficients;
    if (m.weights.size() > 0) entry["weights"] = matrix_json(m.weights);
    if (m.spec.kind == MethodKind::egc) entry["exceeds_contraction_bound"] = m.exceeds_contraction_bound;
    if (!m.p2.empty()) {
      json p2 = json::array();
      for (const P2Solution& s : m.p2) {
        std::vector<int> labels;
        for (int k : s.neighbors) labels.push_back(k + 1);
        p2.push_back({{"node", s.node + 1},
                      {"neighbors", labels},
                      {"coefficients", s.coefficients},
                      {"threshold", s.threshold},
                      {"pd", s.pd},
                      {"pf", s.pf},
                      {"evaluations", s.evaluations},
                      {"trace_length", s.trace.size()}});
      }
      entry["p2"] = p2;
    }
    if (m.p1) {
      entry["p1"] = {{"weights", matrix_json(m.p1->weights)},
                     {"thresholds", m.p1->thresholds},
                     {"far_targets", m.p1->far_targets},
                     {"pd", m.p1->pd},
                     {"reward", m.p1->reward},
                     {"cost", m.p1->cost},
                     {"feasible", m.p1->feasible},
                     {"solver", "coordinate pattern search, best effort"}};
    }
    methods.push_back(entry);
  }
  return {{"rho_db", cell.rho_db}, {"delta_rho_db", cell.delta_rho_db}, {"trials", cell.trials}, {"methods", methods}};
}

std::vector<double> resolve_couplings(const RunConfig& config, const ScenarioConfig& scenario) {
  const CouplingSpec& c = config.detector.couplings;
  const std::size_t edges = scenario.topology.edges().size();
  switch (c.source) {
    case CouplingSource::fixed:
      if (c.values.size() != edges) throw ConfigError("detector.couplings.values", "expected one coupling per edge");
      return c.values;
    case CouplingSource::uniform: {
      CounterRng rng(config.seed, derive_stream({static_cast<std::uint64_t>(StreamPurpose::couplings)}));
      std::vector<double> out;
      for (std::size_t e = 0; e < edges; ++e) out.push_back(c.low + (c.high - c.low) * rng.uniform());
      return out;
    }
    case CouplingSource::learned: {
      const auto records = run_campaign(scenario, scenario.training_slots, config.seed,
                                        campaign_id(StreamPurpose::training, scenario), config.threads);
      TrainingData training = TrainingData::from_records(records);
      if (config.detector.training_labels == TrainingLabels::truth) training.labels = training.truth;
      return learn_couplings(scenario.topology, training.labels, config.detector.zeta).couplings;
    }
  }
  return {};
}

QuadInstance quad_instance(const RunConfig& config, const ScenarioConfig& scenario) {
  QuadInstance q;
  q.topology = scenario.topology;
  q.couplings = resolve_couplings(config, scenario);
  q.energies = SignalBank(scenario).reference_energies();
  q.convention = config.detector.convention;
  q.coupling_convention = config.detector.coupling_convention;
  return q;
}

std::vector<LinearityLevel> linearity_levels(const QuadInstance& instance, int max_iteration, int probes,
                                             std::uint64_t seed, double gamma_scale) {
  const auto hops = instance.topology.hop_matrix();
  const int n = instance.topology.node_count();
  std::vector<LinearityLevel> out;
  for (int l = 1; l <= max_iteration; ++l) {
    LinearityLevel level;
    level.iteration = l;
    level.weights = extract_weights(instance, l);
    CounterRng rng(seed, derive_stream({static_cast<std::uint64_t>(StreamPurpose::probes), static_cast<std::uint64_t>(l)}));
    level.residual = verify_linearity(instance, level.weights, probes, rng, gamma_scale);
    level.max_offset = level.weights.offset.cwiseAbs().maxCoeff();
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const double w = std::abs(level.weights.weights(j, i));
        const int h = hops[j][i];
        if (h > l && w >= 1e-12) ++level.outside_radius;
        if (h > l - 1 && w >= 1e-12) ++level.outside_previous_radius;
        if (h == l) level.max_at_radius = std::max(level.max_at_radius, w);
      }
    }
    out.push_back(std::move(level));
  }
  return out;
}

json linearity_json(const QuadInstance& instance, const std::vector<LinearityLevel>& levels) {
  json list = json::array();
  for (const LinearityLevel& l : levels) {
    list.push_back({{"iteration", l.iteration},
                    {"residual", l.residual},
                    {"max_abs_offset", l.max_offset},
                    {"offsets", std::vector<double>(l.weights.offset.data(), l.weights.offset.data() + l.weights.offset.size())},
                    {"locality_violations", l.outside_radius},
                    {"nonzero_beyond_previous_radius", l.outside_previous_radius},
                    {"max_weight_at_radius", l.max_at_radius},
                    {"weights", matrix_json(l.weights.weights)}});
  }
  return {{"convention", instance.convention == QuadConvention::exact ? "exact" : "paper"},
          {"coupling_convention", instance.coupling_convention == CouplingConvention::merged ? "merged" : "raw"},
          {"couplings", instance.couplings},
          {"energies", instance.energies},
          {"levels", list}};
}

std::vector<GaussianityCondition> run_gaussianity(const ScenarioConfig& scenario, Algorithm algorithm,
                                                  const std::vector<double>& couplings,
                                                  CouplingConvention convention, int iterations,
                                                  const std::vector<std::vector<int>>& conditions,
                                                  const std::vector<int>& nodes, std::int64_t trials,
                                                  std::uint64_t seed, int threads) {
  const MrfParams params(scenario.topology, couplings);
  std::vector<GaussianityCondition> out;
  for (const auto& condition : conditions) {
    ScenarioConfig s = scenario;
    if (static_cast<int>(condition.size()) != s.pu_count) throw std::invalid_argument("one state per PU expected");
    s.activity.forced.assign(condition.size(), std::nullopt);
    std::uint64_t key = 0;
    for (std::size_t p = 0; p < condition.size(); ++p) {
      s.activity.forced[p] = condition[p] != 0;
      key |= static_cast<std::uint64_t>(condition[p] != 0) << p;
    }
    const auto records = run_campaign(s, trials, seed,
                                      derive_stream({campaign_id(StreamPurpose::evaluation, s), key,
                                                     static_cast<std::uint64_t>(algorithm)}),
                                      threads);
    const FloodingEngine engine = FloodingEngine::discrete(s.topology, params, algorithm, convention);

    GaussianityCondition c;
    c.activity = condition;
    c.x = hypotheses(s, condition);
    std::vector<std::vector<double>> samples(nodes.size());
    for (const SlotRecord& r : records) {
      const auto lambda = engine.decision_variables(r.gamma, iterations);
      for (std::size_t i = 0; i < nodes.size(); ++i) samples[i].push_back(lambda.at(static_cast<std::size_t>(nodes[i])));
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      GaussianityNode g;
      g.node = nodes[i];
      g.fit = gaussianity_check(samples[i]);
      std::sort(samples[i].begin(), samples[i].end());
      g.samples = std::move(samples[i]);
      c.nodes.push_back(std::move(g));
    }
    out.push_back(std::move(c));
  }
  return out;
}

double neighbor_approximation_error(const QuadInstance& instance, int iterations,
                                    const std::vector<std::vector<double>>& gammas) {
  const Topology& g = instance.topology;
  double diff = 0.0, norm = 0.0;
  for (const auto& gamma : gammas) {
    const auto lambda = quad_decision_variables(instance, gamma, iterations);
    for (int j = 0; j < g.node_count(); ++j) {
      double approx = gamma[j];
      for (int k : g.neighbors(j)) approx += instance.couplings[static_cast<std::size_t>(*g.edge_index(k, j))] * gamma[k];
      diff += (lambda[j] - approx) * (lambda[j] - approx);
      norm += lambda[j] * lambda[j];
    }
  }
  return std::sqrt(diff / norm);
}

}  // namespace mpfusion
