// Command-line workbench: simulate, sweep-snr, verify-linearity, gaussianity, optimize.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "mpfusion/config.hpp"
#include "mpfusion/experiments.hpp"
#include "mpfusion/kernels.hpp"
#include "mpfusion/output.hpp"

namespace fs = std::filesystem;
using namespace mpfusion;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::int64_t> trials;
  std::optional<int> threads;
  std::optional<std::string> kernels;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file");
  cmd->add_option("--seed", f.seed, "master seed (overrides the config)");
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
  cmd->add_option("--trials", f.trials, "trial budget (overrides the config)")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--kernels", f.kernels, "kernel set: scalar, avx2 or neon");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.output_dir = *f.out;
  if (f.trials) c.evaluation.trials = *f.trials;
  if (f.threads) c.threads = *f.threads;
  if (f.kernels) kernels::select(kernels::parse_isa(*f.kernels));
  if (c.scenario.sensing == SensingMode::energy)
    if (auto warning = energy_detector_warning(c.scenario.samples_per_slot)) std::cerr << "warning: " << *warning << '\n';
  return c;
}

json run_header(const RunConfig& c, const std::string& command) {
  return {{"command", command},
          {"seed", c.seed},
          {"kernels", std::string(kernels::name(kernels::active().isa))},
          {"config", to_json(c)}};
}

int cmd_simulate(const RunConfig& c) {
  const fs::path out = c.output_dir;
  const ExperimentSettings settings = ExperimentSettings::from(c);
  const CellResult cell = simulate_cell(settings);

  CsvTable perf = perf_table();
  append_perf_rows(perf, cell);
  perf.write(out / "perf.csv");
  for (const MethodOutcome& m : cell.methods)
    if (!m.roc.empty()) roc_table(m.roc).write(out / ("roc_" + m.spec.label() + ".csv"));

  const auto training = run_campaign(c.scenario, c.scenario.training_slots, c.seed,
                                     campaign_id(StreamPurpose::training, c.scenario), c.threads);
  campaign_table(c.scenario, training).write(out / "campaign.csv");

  json report = run_header(c, "simulate");
  report["result"] = cell_json(cell);
  write_json(out / "report.json", report);
  for (const MethodOutcome& m : cell.methods)
    std::cout << m.spec.label() << ": pf " << format_number(m.average.pf.value_or(NAN)) << ", pd "
              << format_number(m.average.pd.value_or(NAN)) << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& c) {
  const fs::path out = c.output_dir;
  const auto cells = sweep_snr(ExperimentSettings::from(c), c.evaluation.rho_grid);
  CsvTable perf = perf_table();
  json list = json::array();
  for (const CellResult& cell : cells) {
    append_perf_rows(perf, cell);
    list.push_back(cell_json(cell));
  }
  perf.write(out / "sweep.csv");
  json report = run_header(c, "sweep-snr");
  report["cells"] = list;
  write_json(out / "sweep.json", report);
  std::cout << "wrote " << perf.rows() << " rows to " << (out / "sweep.csv").string() << '\n';
  return 0;
}

int cmd_verify(const RunConfig& c) {
  const fs::path out = c.output_dir;
  const QuadInstance instance = quad_instance(c, c.scenario);
  const int depth = c.detector_options().resolved_iterations(instance.topology);
  json report = run_header(c, "verify-linearity");
  try {
    const auto levels = linearity_levels(instance, depth, c.evaluation.linearity_probes, c.seed);
    for (const LinearityLevel& l : levels) {
      weights_table(l.weights.weights, l.weights.offset).write(out / ("weights_l" + std::to_string(l.iteration) + ".csv"));
      std::cout << "l=" << l.iteration << " residual " << format_number(l.residual) << ", locality violations "
                << l.outside_radius << ", max |offset| " << format_number(l.max_offset) << '\n';
    }
    report["result"] = linearity_json(instance, levels);
  } catch (const ConcavityError& e) {
    report["error"] = {{"type", "concavity"}, {"node", e.node() + 1}, {"message", e.what()}};
    write_json(out / "linearity.json", report);
    std::cerr << e.what() << '\n';
    return 3;
  }
  write_json(out / "linearity.json", report);
  return 0;
}

int cmd_gaussianity(const RunConfig& c) {
  const fs::path out = c.output_dir;
  const MethodSpec method = c.detector.method();
  if (method.kind != MethodKind::mp && method.kind != MethodKind::bp)
    throw ConfigError("detector.algorithm", "gaussianity needs mp or bp");
  std::vector<int> nodes;
  for (int n : c.evaluation.nodes) nodes.push_back(n - 1);
  const auto couplings = resolve_couplings(c, c.scenario);
  const int depth = c.detector_options().resolved_iterations(c.scenario.topology);
  const auto results = run_gaussianity(c.scenario, method.kind == MethodKind::mp ? Algorithm::max_product : Algorithm::sum_product,
                                       couplings, c.detector.coupling_convention, depth, c.evaluation.conditions, nodes,
                                       c.evaluation.trials, c.seed, c.threads);

  CsvTable cdf({"condition", "node", "value", "ecdf", "normal_cdf"});
  json conditions = json::array();
  for (std::size_t ci = 0; ci < results.size(); ++ci) {
    const auto& r = results[ci];
    std::string label;
    for (int a : r.activity) label += a ? '1' : '0';
    json per_node = json::array();
    for (const GaussianityNode& g : r.nodes) {
      per_node.push_back({{"node", g.node + 1}, {"x", r.x[g.node]}, {"ks", g.fit.ks}, {"mean", g.fit.mean}, {"stddev", g.fit.stddev}});
      const auto n = static_cast<double>(g.samples.size());
      for (int p = 0; p < c.evaluation.cdf_points; ++p) {
        const auto idx = static_cast<std::size_t>(std::llround(p * (n - 1) / (c.evaluation.cdf_points - 1)));
        const double v = g.samples[idx];
        cdf.cell(label).cell(g.node + 1).cell(v).cell((idx + 1) / n).cell(normal_cdf((v - g.fit.mean) / g.fit.stddev));
        cdf.end_row();
      }
      std::cout << "pu=" << label << " node " << g.node + 1 << ": KS " << format_number(g.fit.ks) << '\n';
    }
    conditions.push_back({{"pu_states", r.activity}, {"nodes", per_node}});
  }
  cdf.write(out / "cdf.csv");
  json report = run_header(c, "gaussianity");
  report["method"] = method.label();
  report["couplings"] = couplings;
  report["conditions"] = conditions;
  write_json(out / "gaussianity.json", report);
  return 0;
}

int cmd_optimize(const RunConfig& c) {
  const fs::path out = c.output_dir;
  const MethodSpec method = c.detector.method();
  if (method.kind != MethodKind::lin_prop && method.kind != MethodKind::lin_prop_blind)
    throw ConfigError("detector.algorithm", "optimize needs linProp or linPropB");
  ExperimentSettings settings = ExperimentSettings::from(c);
  settings.methods = {method};
  const CellResult cell = simulate_cell(settings);
  CsvTable perf = perf_table();
  append_perf_rows(perf, cell);
  perf.write(out / "perf.csv");
  json report = run_header(c, "optimize");
  report["result"] = cell_json(cell);
  write_json(out / "solution.json", report);
  const MethodOutcome& m = cell.methods.front();
  for (const P2Solution& s : m.p2) {
    std::cout << "node " << s.node + 1 << ": c =";
    for (double v : s.coefficients) std::cout << ' ' << format_number(v);
    std::cout << ", tau " << format_number(s.threshold) << '\n';
  }
  std::cout << "achieved pf " << format_number(m.average.pf.value_or(NAN)) << ", pd "
            << format_number(m.average.pd.value_or(NAN)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Message-passing data fusion workbench"};
  app.require_subcommand(1);
  CommonFlags flags;
  auto* simulate = app.add_subcommand("simulate", "train, calibrate and evaluate detectors at one SNR point");
  auto* sweep = app.add_subcommand("sweep-snr", "detection rate against average SNR with pinned false alarms");
  auto* verify = app.add_subcommand("verify-linearity", "extract fusion weights of the continuous max-product");
  auto* gauss = app.add_subcommand("gaussianity", "distribution of decision variables under fixed PU states");
  auto* optimize = app.add_subcommand("optimize", "solve the local fusion-coefficient program");
  for (auto* cmd : {simulate, sweep, verify, gauss, optimize}) add_common(cmd, flags);

  CLI11_PARSE(app, argc, argv);
  try {
    const RunConfig config = resolve(flags);
    if (simulate->parsed()) return cmd_simulate(config);
    if (sweep->parsed()) return cmd_sweep(config);
    if (verify->parsed()) return cmd_verify(config);
    if (gauss->parsed()) return cmd_gaussianity(config);
    if (optimize->parsed()) return cmd_optimize(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
