#include "mpfusion/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace mpfusion {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

namespace {

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

// Object reader that rejects keys it was never asked about.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }
  ~Reader() = default;

  const std::string& path() const { return path_; }
  bool has(const std::string& key) {
    known_.insert(key);
    return node_.contains(key);
  }
  const json& at(const std::string& key) {
    known_.insert(key);
    return node_.at(key);
  }
  std::string field(const std::string& key) const { return join(path_, key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    out = as<T>(node_.at(key), field(key));
  }

  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!known_.count(key)) throw ConfigError(field(key), "unknown key");
  }

  template <class T>
  static T as(const json& value, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) throw ConfigError(path, "expected a boolean");
      return value.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!value.is_number_integer()) throw ConfigError(path, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (value.is_number_unsigned()) return value.get<T>();
        if (value.get<std::int64_t>() < 0) throw ConfigError(path, "expected a non-negative integer");
      }
      return value.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!value.is_number()) throw ConfigError(path, "expected a number");
      const double v = value.get<double>();
      if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
      return v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!value.is_string()) throw ConfigError(path, "expected a string");
      return value.get<std::string>();
    } else {
      if (!value.is_array()) throw ConfigError(path, "expected an array");
      T out;
      for (std::size_t i = 0; i < value.size(); ++i)
        out.push_back(as<typename T::value_type>(value[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> known_;
};

template <class E>
E pick(const std::string& text, const std::string& path, std::initializer_list<std::pair<const char*, E>> options) {
  std::string allowed;
  for (const auto& [name, value] : options) {
    if (text == name) return value;
    allowed += allowed.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(path, "unknown value '" + text + "' (expected one of " + allowed + ")");
}

template <class E>
const char* name_of(E value, std::initializer_list<std::pair<const char*, E>> options) {
  for (const auto& [name, v] : options)
    if (v == value) return name;
  return "?";
}

const std::initializer_list<std::pair<const char*, SensingMode>> kSensing{{"coherent", SensingMode::coherent},
                                                                          {"energy", SensingMode::energy}};
const std::initializer_list<std::pair<const char*, DispersionRule>> kDispersion{
    {"fixed", DispersionRule::fixed}, {"proportional", DispersionRule::proportional}};
const std::initializer_list<std::pair<const char*, QuadConvention>> kQuad{{"exact", QuadConvention::exact},
                                                                          {"paper", QuadConvention::paper}};
const std::initializer_list<std::pair<const char*, CouplingConvention>> kCoupling{
    {"merged", CouplingConvention::merged}, {"raw", CouplingConvention::raw}};
const std::initializer_list<std::pair<const char*, CouplingSource>> kSource{
    {"learned", CouplingSource::learned}, {"fixed", CouplingSource::fixed}, {"uniform", CouplingSource::uniform}};
const std::initializer_list<std::pair<const char*, TrainingLabels>> kLabels{{"local", TrainingLabels::local},
                                                                            {"truth", TrainingLabels::truth}};
const std::set<std::string> kAlgorithms{"local", "mp", "bp", "linear", "linOpt", "linProp", "linPropB", "egc"};

void parse_activity(const json& node, const std::string& path, ActivityProcess& a, int pu_count) {
  Reader r(node, path);
  r.get("on_probability", a.on_probability);
  r.get("refresh_probability", a.refresh_probability);
  r.get("correlation", a.correlation);
  a.forced.assign(static_cast<std::size_t>(pu_count), std::nullopt);
  if (r.has("forced")) {
    const json& f = r.at("forced");
    if (!f.is_array()) throw ConfigError(r.field("forced"), "expected an array");
    if (static_cast<int>(f.size()) != pu_count) throw ConfigError(r.field("forced"), "expected one entry per PU");
    for (std::size_t p = 0; p < f.size(); ++p) {
      const std::string item = r.field("forced") + "[" + std::to_string(p) + "]";
      if (f[p].is_null()) continue;
      if (f[p].is_boolean()) {
        a.forced[p] = f[p].get<bool>();
      } else if (f[p].is_number_integer() && (f[p] == 0 || f[p] == 1)) {
        a.forced[p] = f[p].get<int>() == 1;
      } else {
        throw ConfigError(item, "expected null, true/false or 0/1");
      }
    }
  }
  r.finish();
}

void parse_scenario(const json& node, ScenarioConfig& s) {
  Reader r(node, "scenario");
  int nodes = s.node_count();
  r.get("node_count", nodes);
  if (nodes < 1) throw ConfigError(r.field("node_count"), "must be positive");

  std::vector<std::pair<int, int>> edges;
  if (r.has("edges")) {
    const auto list = Reader::as<std::vector<std::vector<int>>>(r.at("edges"), r.field("edges"));
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string item = r.field("edges") + "[" + std::to_string(i) + "]";
      if (list[i].size() != 2) throw ConfigError(item, "expected a pair of node labels");
      edges.emplace_back(list[i][0] - 1, list[i][1] - 1);
    }
  } else {
    for (int i = 0; i + 1 < nodes; ++i) edges.emplace_back(i, i + 1);
  }
  try {
    s.topology = Topology(nodes, edges);
  } catch (const std::exception& e) {
    throw ConfigError(r.field("edges"), e.what());
  }

  r.get("pu_count", s.pu_count);
  if (s.pu_count < 1 || s.pu_count > 16) throw ConfigError(r.field("pu_count"), "must lie in 1..16");
  if (r.has("coverage")) {
    const json& list = r.at("coverage");
    if (!list.is_array()) throw ConfigError(r.field("coverage"), "expected an array");
    s.coverage.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      Reader c(list[i], r.field("coverage") + "[" + std::to_string(i) + "]");
      Coverage entry{0, 0, 0};
      if (!c.has("pu") || !c.has("node")) throw ConfigError(c.path(), "needs 'pu' and 'node'");
      c.get("pu", entry.pu);
      c.get("node", entry.node);
      c.get("dispersion", entry.multiplier);
      c.finish();
      --entry.pu;
      --entry.node;
      s.coverage.push_back(entry);
    }
  }
  r.get("rho_db", s.rho_db);
  r.get("delta_rho_db", s.delta_rho_db);
  if (r.has("dispersion_rule"))
    s.dispersion_rule = pick(Reader::as<std::string>(r.at("dispersion_rule"), r.field("dispersion_rule")),
                             r.field("dispersion_rule"), kDispersion);
  r.get("dispersion_factor", s.dispersion_factor);
  r.get("samples_per_slot", s.samples_per_slot);
  r.get("noise_variance", s.noise_variance);
  r.get("alpha", s.alpha);
  r.get("training_slots", s.training_slots);
  if (r.has("sensing"))
    s.sensing = pick(Reader::as<std::string>(r.at("sensing"), r.field("sensing")), r.field("sensing"), kSensing);
  if (static_cast<int>(s.activity.on_probability.size()) != s.pu_count)
    s.activity.on_probability.assign(static_cast<std::size_t>(s.pu_count), 0.5);
  s.activity.forced.assign(static_cast<std::size_t>(s.pu_count), std::nullopt);
  if (r.has("activity")) parse_activity(r.at("activity"), r.field("activity"), s.activity, s.pu_count);
  r.finish();

  try {
    s.validate();
  } catch (const std::exception& e) {
    throw ConfigError("scenario", e.what());
  }
}

void parse_detector(const json& node, DetectorConfig& d) {
  Reader r(node, "detector");
  r.get("algorithm", d.algorithm);
  if (!kAlgorithms.count(d.algorithm))
    throw ConfigError(r.field("algorithm"), "unknown algorithm '" + d.algorithm + "'");
  r.get("zeta", d.zeta);
  r.get("c0", d.c0);
  r.get("iterations", d.iterations);
  if (d.iterations < 0) throw ConfigError(r.field("iterations"), "must be non-negative (0 selects N - 1)");
  if (r.has("convention"))
    d.convention = pick(Reader::as<std::string>(r.at("convention"), r.field("convention")), r.field("convention"), kQuad);
  if (r.has("coupling_convention"))
    d.coupling_convention = pick(Reader::as<std::string>(r.at("coupling_convention"), r.field("coupling_convention")),
                                 r.field("coupling_convention"), kCoupling);
  if (r.has("training_labels"))
    d.training_labels = pick(Reader::as<std::string>(r.at("training_labels"), r.field("training_labels")),
                             r.field("training_labels"), kLabels);
  r.get("majority_rounds", d.majority_rounds);
  if (d.majority_rounds < 0) throw ConfigError(r.field("majority_rounds"), "must be non-negative");
  if (r.has("couplings")) {
    Reader c(r.at("couplings"), r.field("couplings"));
    if (c.has("source"))
      d.couplings.source = pick(Reader::as<std::string>(c.at("source"), c.field("source")), c.field("source"), kSource);
    c.get("values", d.couplings.values);
    c.get("low", d.couplings.low);
    c.get("high", d.couplings.high);
    c.finish();
    if (d.couplings.low > d.couplings.high) throw ConfigError(c.field("low"), "must not exceed 'high'");
  }
  r.finish();
}

void parse_evaluation(const json& node, EvaluationConfig& e) {
  Reader r(node, "evaluation");
  r.get("trials", e.trials);
  if (e.trials < 1) throw ConfigError(r.field("trials"), "must be positive");
  r.get("far", e.far);
  if (!(e.far > 0.0 && e.far < 1.0)) throw ConfigError(r.field("far"), "must lie in (0, 1)");
  r.get("methods", e.methods);
  for (std::size_t i = 0; i < e.methods.size(); ++i) {
    try {
      MethodSpec::parse(e.methods[i]);
    } catch (const std::exception& ex) {
      throw ConfigError(r.field("methods") + "[" + std::to_string(i) + "]", ex.what());
    }
  }
  r.get("rho_grid", e.rho_grid);
  if (e.rho_grid.empty()) throw ConfigError(r.field("rho_grid"), "must not be empty");
  r.get("linearity_probes", e.linearity_probes);
  if (e.linearity_probes < 1) throw ConfigError(r.field("linearity_probes"), "must be positive");
  r.get("conditions", e.conditions);
  if (e.conditions.empty()) throw ConfigError(r.field("conditions"), "must not be empty");
  r.get("nodes", e.nodes);
  r.get("cdf_points", e.cdf_points);
  if (e.cdf_points < 2) throw ConfigError(r.field("cdf_points"), "must be at least 2");
  r.get("roc_taus", e.roc_taus);
  r.finish();
}

}  // namespace

MethodSpec DetectorConfig::method() const {
  if (algorithm == "mp") return {MethodKind::mp, zeta};
  if (algorithm == "bp") return {MethodKind::bp, zeta};
  if (algorithm == "linear") return {MethodKind::lin, zeta};
  if (algorithm == "egc") return {MethodKind::egc, c0};
  return MethodSpec::parse(algorithm);
}

std::vector<MethodSpec> RunConfig::methods() const {
  if (evaluation.methods.empty()) return {detector.method()};
  std::vector<MethodSpec> out;
  for (const auto& m : evaluation.methods) out.push_back(MethodSpec::parse(m));
  return out;
}

DetectorOptions RunConfig::detector_options() const {
  DetectorOptions o;
  o.iterations = detector.iterations;
  o.coupling_convention = detector.coupling_convention;
  o.majority_rounds = detector.majority_rounds;
  o.far = evaluation.far;
  return o;
}

RunConfig parse_config(const json& document) {
  RunConfig c;
  Reader r(document, "");
  r.get("seed", c.seed);
  r.get("threads", c.threads);
  if (c.threads < 1) throw ConfigError("threads", "must be positive");
  if (r.has("scenario")) parse_scenario(r.at("scenario"), c.scenario);
  if (r.has("detector")) parse_detector(r.at("detector"), c.detector);
  if (r.has("evaluation")) parse_evaluation(r.at("evaluation"), c.evaluation);
  if (r.has("output")) {
    Reader o(r.at("output"), "output");
    o.get("dir", c.output_dir);
    o.finish();
  }
  r.finish();

  const int n = c.scenario.node_count();
  for (std::size_t i = 0; i < c.evaluation.nodes.size(); ++i)
    if (c.evaluation.nodes[i] < 1 || c.evaluation.nodes[i] > n)
      throw ConfigError("evaluation.nodes[" + std::to_string(i) + "]", "node outside 1.." + std::to_string(n));
  for (std::size_t i = 0; i < c.evaluation.conditions.size(); ++i) {
    const auto& cond = c.evaluation.conditions[i];
    const std::string path = "evaluation.conditions[" + std::to_string(i) + "]";
    if (static_cast<int>(cond.size()) != c.scenario.pu_count) throw ConfigError(path, "expected one state per PU");
    for (int v : cond)
      if (v != 0 && v != 1) throw ConfigError(path, "PU states are 0 or 1");
  }
  if (c.detector.couplings.source == CouplingSource::fixed &&
      c.detector.couplings.values.size() != c.scenario.topology.edges().size())
    throw ConfigError("detector.couplings.values", "expected one coupling per edge");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  json document;
  try {
    document = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(document);
}

json to_json(const RunConfig& c) {
  const ScenarioConfig& s = c.scenario;
  json edges = json::array();
  for (const Edge& e : s.topology.edges()) edges.push_back({e.a + 1, e.b + 1});
  json coverage = json::array();
  for (const Coverage& cv : s.coverage) coverage.push_back({{"pu", cv.pu + 1}, {"node", cv.node + 1}, {"dispersion", cv.multiplier}});
  json forced = json::array();
  for (const auto& f : s.activity.forced) forced.push_back(f ? json(*f) : json(nullptr));

  json scenario = {{"node_count", s.node_count()},
                   {"edges", edges},
                   {"pu_count", s.pu_count},
                   {"coverage", coverage},
                   {"rho_db", s.rho_db},
                   {"delta_rho_db", s.delta_rho_db},
                   {"dispersion_rule", name_of(s.dispersion_rule, kDispersion)},
                   {"dispersion_factor", s.dispersion_factor},
                   {"samples_per_slot", s.samples_per_slot},
                   {"noise_variance", s.noise_variance},
                   {"alpha", s.alpha},
                   {"training_slots", s.training_slots},
                   {"sensing", name_of(s.sensing, kSensing)},
                   {"activity",
                    {{"on_probability", s.activity.on_probability},
                     {"refresh_probability", s.activity.refresh_probability},
                     {"correlation", s.activity.correlation},
                     {"forced", forced}}}};
  const DetectorConfig& d = c.detector;
  json detector = {{"algorithm", d.algorithm},
                   {"zeta", d.zeta},
                   {"c0", d.c0},
                   {"iterations", d.iterations},
                   {"convention", name_of(d.convention, kQuad)},
                   {"coupling_convention", name_of(d.coupling_convention, kCoupling)},
                   {"training_labels", name_of(d.training_labels, kLabels)},
                   {"majority_rounds", d.majority_rounds},
                   {"couplings",
                    {{"source", name_of(d.couplings.source, kSource)},
                     {"values", d.couplings.values},
                     {"low", d.couplings.low},
                     {"high", d.couplings.high}}}};
  const EvaluationConfig& e = c.evaluation;
  json evaluation = {{"trials", e.trials},         {"far", e.far},
                     {"methods", e.methods},       {"rho_grid", e.rho_grid},
                     {"linearity_probes", e.linearity_probes},
                     {"conditions", e.conditions}, {"nodes", e.nodes},
                     {"cdf_points", e.cdf_points}, {"roc_taus", e.roc_taus}};
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"scenario", scenario},
          {"detector", detector},
          {"evaluation", evaluation},
          {"output", {{"dir", c.output_dir}}}};
}

}  // namespace mpfusion
