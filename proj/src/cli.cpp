#include "aggdiff/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "aggdiff/config_space.hpp"
#include "aggdiff/errors.hpp"
#include "aggdiff/format.hpp"
#include "aggdiff/kernels.hpp"
#include "aggdiff/plot.hpp"
#include "aggdiff/validation.hpp"

namespace aggdiff {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("field '" + path + "': expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown field '" + join(path, key) + "'");
  }
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError("missing field '" + join(path, key) + "'");
  return obj.at(key);
}

double as_double(const json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError("field '" + name + "': expected a number");
  return v.get<double>();
}

long long as_integer(const json& v, const std::string& name) {
  if (!v.is_number_integer()) throw ConfigError("field '" + name + "': expected an integer");
  return v.get<long long>();
}

int as_int(const json& v, const std::string& name) {
  const long long x = as_integer(v, name);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError("field '" + name + "': out of range");
  return static_cast<int>(x);
}

bool as_bool(const json& v, const std::string& name) {
  if (!v.is_boolean()) throw ConfigError("field '" + name + "': expected a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& name) {
  if (!v.is_string()) throw ConfigError("field '" + name + "': expected a string");
  return v.get<std::string>();
}

std::vector<double> as_doubles(const json& v, const std::string& name) {
  if (!v.is_array()) throw ConfigError("field '" + name + "': expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_double(v[i], name + "[" + std::to_string(i) + "]"));
  }
  return out;
}

template <class T, class Conv>
void optional_field(const json& obj, const std::string& path, const std::string& key, T& target,
                    Conv conv) {
  if (obj.contains(key)) target = conv(obj.at(key), join(path, key));
}

ModelConfig model_from_json(const json& j) {
  const std::string p = "model";
  check_keys(j, p, {"chi", "N", "d", "kernel", "non_paper_regime"});
  ModelConfig m;
  m.chi = as_double(require(j, p, "chi"), "model.chi");
  m.N = as_int(require(j, p, "N"), "model.N");
  m.d = as_int(require(j, p, "d"), "model.d");
  optional_field(j, p, "non_paper_regime", m.non_paper_regime, as_bool);
  const json& k = require(j, p, "kernel");
  check_keys(k, "model.kernel", {"name", "params", "table"});
  if (k.contains("table")) {
    if (k.contains("params")) {
      throw ConfigError("field 'model.kernel.params': not allowed with model.kernel.table");
    }
    m.kernel.table = as_string(k.at("table"), "model.kernel.table");
    if (k.contains("name")) m.kernel.name = as_string(k.at("name"), "model.kernel.name");
  } else {
    m.kernel.name = as_string(require(k, "model.kernel", "name"), "model.kernel.name");
    if (k.contains("params")) {
      const json& params = k.at("params");
      if (!params.is_object()) {
        throw ConfigError("field 'model.kernel.params': expected an object");
      }
      for (const auto& [key, value] : params.items()) {
        m.kernel.params[key] = as_double(value, "model.kernel.params." + key);
      }
    }
  }
  return m;
}

AnalyzeConfig analyze_from_json(const json& j) {
  const std::string p = "analyze";
  check_keys(j, p, {"p_values", "delta", "levels", "margin", "h2_p", "h2_delta", "h2_samples"});
  AnalyzeConfig a;
  optional_field(j, p, "p_values", a.p_values, as_doubles);
  optional_field(j, p, "delta", a.delta, as_double);
  optional_field(j, p, "levels", a.levels, as_int);
  optional_field(j, p, "margin", a.margin, as_double);
  optional_field(j, p, "h2_p", a.h2_p, as_double);
  optional_field(j, p, "h2_delta", a.h2_delta, as_double);
  optional_field(j, p, "h2_samples", a.h2_samples, as_integer);
  return a;
}

SimulateConfig simulate_from_json(const json& j) {
  const std::string p = "simulate";
  check_keys(j, p,
             {"dt", "t_end", "scheme", "taming_on", "replicas", "absorb_min_dist", "absorb_radius",
              "record_stride", "histogram_bins", "initial"});
  SimulateConfig s;
  optional_field(j, p, "dt", s.dt, as_double);
  optional_field(j, p, "t_end", s.t_end, as_double);
  optional_field(j, p, "scheme", s.scheme, as_string);
  optional_field(j, p, "taming_on", s.taming_on, as_bool);
  optional_field(j, p, "replicas", s.replicas, as_int);
  optional_field(j, p, "absorb_min_dist", s.absorb_min_dist, as_double);
  optional_field(j, p, "absorb_radius", s.absorb_radius, as_double);
  optional_field(j, p, "record_stride", s.record_stride, as_int);
  optional_field(j, p, "histogram_bins", s.histogram_bins, as_int);
  if (j.contains("initial")) {
    const json& init = j.at("initial");
    if (init.is_string()) {
      s.initial_sampler = init.get<std::string>();
    } else if (init.is_array()) {
      s.initial_positions = as_doubles(init, "simulate.initial");
    } else {
      throw ConfigError(
          "field 'simulate.initial': expected a position array or a sampler string");
    }
  }
  return s;
}

json model_to_json(const ModelConfig& m) {
  json k = json::object();
  if (!m.kernel.table.empty()) {
    k["table"] = m.kernel.table;
    if (!m.kernel.name.empty()) k["name"] = m.kernel.name;
  } else {
    k["name"] = m.kernel.name;
    k["params"] = m.kernel.params;
  }
  return {{"chi", m.chi},
          {"N", m.N},
          {"d", m.d},
          {"kernel", k},
          {"non_paper_regime", m.non_paper_regime}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

struct Globals {
  std::string config_path;
  std::string config_text;
  RunConfig config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  bool strict = false;
  unsigned threads = 1;

  std::filesystem::path base_dir() const {
    return config_path.empty() ? std::filesystem::path{}
                               : std::filesystem::path(config_path).parent_path();
  }
  std::uint64_t seed_or(std::uint64_t fallback) const {
    if (seed) return *seed;
    if (config.seed) return *config.seed;
    return fallback;
  }
  const ModelConfig& model() const {
    if (!config.model) throw ConfigError("missing field 'model'");
    return *config.model;
  }
};

int cmd_analyze(const Globals& g, std::ostream& out) {
  const ModelParams m = model_params(g.model(), g.base_dir());
  const AnalyzeConfig a = g.config.analyze.value_or(AnalyzeConfig{});
  CertificateOptions opts;
  opts.classifier.delta = a.delta;
  opts.classifier.levels = a.levels;
  opts.classifier.margin = a.margin;
  opts.p_values = a.p_values;
  opts.h2_p = a.h2_p;
  opts.h2_delta = a.h2_delta;
  opts.h2_samples = a.h2_samples;
  opts.seed = g.seed_or(0);
  opts.threads = g.threads;
  const ConditionCertificate cert = analyze(m, opts);
  std::filesystem::create_directories(g.out_dir);
  write_file(g.out_dir / "certificate.json", to_json(cert).dump(2) + "\n");
  write_file(g.out_dir / "report.txt", text_report(cert));
  out << "n_k: "
      << (cert.n_k.value ? std::to_string(*cert.n_k.value) : std::string("none")) << "\n";
  out << "wrote " << (g.out_dir / "certificate.json").string() << " and "
      << (g.out_dir / "report.txt").string() << "\n";
  if (g.strict && cert.any_inconclusive()) {
    out << "inconclusive verdicts present (--strict)\n";
    return 2;
  }
  return 0;
}

int cmd_simulate(const Globals& g, std::ostream& out) {
  const ModelParams m = model_params(g.model(), g.base_dir());
  if (!g.config.simulate) throw ConfigError("missing field 'simulate'");
  const SimulateConfig& s = *g.config.simulate;
  const SimulationParams p = simulation_params(m, s, g.seed_or(0));
  InitialSpec init;
  json initial_json;
  if (s.initial_positions) {
    init = InitialSpec::from_configuration(
        Configuration(m.N, m.d, *s.initial_positions, m.non_paper_regime));
    initial_json = *s.initial_positions;
  } else if (!s.initial_sampler.empty()) {
    init = InitialSpec::from_sampler(s.initial_sampler);
    initial_json = s.initial_sampler;
  } else {
    throw ConfigError("missing field 'simulate.initial'");
  }
  if (s.histogram_bins < 1) throw ConfigError("field 'simulate.histogram_bins': must be >= 1");

  const auto records = run(p, init, g.threads);
  const EnsembleSummary summary = ensemble_stats(records, s.histogram_bins);

  json replicas = json::array();
  for (const auto& r : records) {
    replicas.push_back({{"replica_id", r.replica_id},
                        {"cemetery_time", r.cemetery_time ? json(*r.cemetery_time) : json()},
                        {"cemetery_cause", to_string(r.cemetery_cause)},
                        {"max_step_displacement", r.max_step_displacement}});
  }
  json doc = {{"schema_version", 1},
              {"run",
               {{"seed", p.master_seed},
                {"config_hash", git_blob_hash(g.config_text)},
                {"params", to_json(p)},
                {"initial", initial_json},
                {"state_space_q", state_space_q(m)}}},
              {"replicas", replicas},
              {"ensemble", to_json(summary)}};
  std::filesystem::create_directories(g.out_dir);
  write_file(g.out_dir / "trajectories.csv", trajectories_csv(records));
  write_file(g.out_dir / "summary.json", doc.dump(2) + "\n");
  out << "final survival: " << format_double(summary.survival.back()) << "\n";
  out << "wrote " << (g.out_dir / "trajectories.csv").string() << " and "
      << (g.out_dir / "summary.json").string() << "\n";
  return 0;
}

int cmd_validate(const Globals& g, const std::string& suite_flag, bool negative,
                 std::ostream& out) {
  ValidationOptions opts;
  opts.seed = g.seed_or(42);
  opts.threads = g.threads;
  opts.selftest_negative = negative;
  if (g.config.model) opts.model = model_params(*g.config.model, g.base_dir());
  std::string suite = "all";
  if (g.config.validate) suite = g.config.validate->suite;
  if (!suite_flag.empty()) suite = suite_flag;

  const auto outcomes = run_validation(suite, opts);
  bool failed = false, inconclusive = false;
  json list = json::array();
  for (const auto& o : outcomes) {
    list.push_back(to_json(o));
    std::string tag = o.passed ? "PASS" : (o.inconclusive ? "INCONCLUSIVE" : "FAIL");
    if (!o.passed && !o.inconclusive) failed = true;
    if (o.inconclusive) inconclusive = true;
    out << tag << " " << o.suite << " [" << o.name << "] measured=" << format_double(o.measured)
        << " tol=" << format_double(o.tolerance);
    if (!o.detail.empty()) out << " (" << o.detail << ")";
    out << "\n";
  }
  const json doc = {{"schema_version", 1},
                    {"suite", suite},
                    {"seed", opts.seed},
                    {"selftest_negative", negative},
                    {"passed", !failed},
                    {"outcomes", list}};
  std::filesystem::create_directories(g.out_dir);
  write_file(g.out_dir / "validation.json", doc.dump(2) + "\n");
  if (failed) return 3;
  if (inconclusive && g.strict) return 2;
  return 0;
}

int cmd_eval(const Globals& g, const std::string& configuration_path, const std::string& what,
             std::ostream& out) {
  const ModelParams m = model_params(g.model(), g.base_dir());
  std::optional<Configuration> loaded;
  if (!configuration_path.empty()) {
    loaded = read_configuration(configuration_path, m.non_paper_regime);
  } else if (g.config.eval) {
    loaded = Configuration(m.N, m.d, g.config.eval->positions, m.non_paper_regime);
  } else {
    throw ConfigError("missing field 'eval' (or pass --configuration)");
  }
  const Configuration& c = *loaded;
  if (c.particles() != m.N || c.dim() != m.d) {
    throw InputError("configuration shape does not match model N and d");
  }
  const std::vector<double> positions(c.coords().begin(), c.coords().end());
  json doc = {{"N", m.N}, {"d", m.d}, {"positions", positions}};
  try {
    doc["log_weight"] = log_weight(c, m);
    const WeightValue w = weight_value(c, m);
    doc["weight"] = w.value;
    doc["weight_saturated"] = w.saturated;
  } catch (const SingularConfiguration&) {
    doc["log_weight"] = nullptr;
    doc["weight"] = 0.0;
    doc["weight_saturated"] = false;
  }
  try {
    doc["drift"] = drift(c, m).components;
    doc["potential"] = potential(c, m);
  } catch (const SingularConfiguration&) {
    doc["drift"] = nullptr;
    doc["potential"] = nullptr;
  }
  const ClusterReport cr = cluster_report(c, 0.0);
  doc["min_pair_distance"] = min_pair_distance(c);
  doc["clusters"] = cr.groups;
  doc["max_multiplicity"] = cr.max_multiplicity;
  json eq = json::object();
  for (int q = 2; q <= m.N + 1; ++q) eq[std::to_string(q)] = in_Eq(c, q);
  doc["in_E_q"] = eq;
  doc["in_nodal_set"] = in_nodal_set(c, m.kernel);
  std::filesystem::create_directories(g.out_dir);
  write_file(g.out_dir / "eval.json", doc.dump(2) + "\n");
  if (what.empty()) {
    out << doc.dump(2) << "\n";
  } else {
    const std::map<std::string, std::string> keys = {
        {"drift", "drift"}, {"logweight", "log_weight"}, {"potential", "potential"}};
    out << doc.at(keys.at(what)).dump() << "\n";
  }
  return 0;
}

int cmd_plot(const Globals& g, const std::vector<std::string>& inputs, std::ostream& out) {
  if (inputs.empty()) throw InputError("plot needs at least one --input file");
  std::map<std::string, std::string> files;
  for (const auto& path : inputs) {
    const std::string text = read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    std::map<std::string, std::string> produced;
    if (first != std::string::npos && text[first] == '{') {
      json j;
      try {
        j = json::parse(text);
      } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
      }
      produced = plot_summary(j);
    } else {
      produced = plot_trajectories(text);
    }
    files.merge(produced);
  }
  std::filesystem::create_directories(g.out_dir);
  for (const auto& [name, svg] : files) {
    write_file(g.out_dir / name, svg);
    out << "wrote " << (g.out_dir / name).string() << "\n";
  }
  return 0;
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  check_keys(j, "", {"schema_version", "seed", "model", "analyze", "simulate", "eval", "validate"});
  RunConfig c;
  c.schema_version = as_int(require(j, "", "schema_version"), "schema_version");
  if (c.schema_version != kRunConfigSchemaVersion) {
    throw ConfigError("field 'schema_version': unsupported version " +
                      std::to_string(c.schema_version));
  }
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("field 'seed': expected an unsigned integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("analyze")) c.analyze = analyze_from_json(j.at("analyze"));
  if (j.contains("simulate")) c.simulate = simulate_from_json(j.at("simulate"));
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, "eval", {"positions"});
    c.eval = EvalConfig{as_doubles(require(e, "eval", "positions"), "eval.positions")};
  }
  if (j.contains("validate")) {
    const json& v = j.at("validate");
    check_keys(v, "validate", {"suite"});
    ValidateConfig vc;
    optional_field(v, "validate", "suite", vc.suite, as_string);
    c.validate = vc;
  }
  return c;
}

json to_json(const RunConfig& c) {
  json j = {{"schema_version", c.schema_version}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.model) j["model"] = model_to_json(*c.model);
  if (c.analyze) {
    const auto& a = *c.analyze;
    j["analyze"] = {{"p_values", a.p_values}, {"delta", a.delta},       {"levels", a.levels},
                    {"margin", a.margin},     {"h2_p", a.h2_p},         {"h2_delta", a.h2_delta},
                    {"h2_samples", a.h2_samples}};
  }
  if (c.simulate) {
    const auto& s = *c.simulate;
    json sj = {{"dt", s.dt},
               {"t_end", s.t_end},
               {"scheme", s.scheme},
               {"taming_on", s.taming_on},
               {"replicas", s.replicas},
               {"absorb_min_dist", s.absorb_min_dist},
               {"absorb_radius", s.absorb_radius},
               {"record_stride", s.record_stride},
               {"histogram_bins", s.histogram_bins}};
    if (s.initial_positions) {
      sj["initial"] = *s.initial_positions;
    } else if (!s.initial_sampler.empty()) {
      sj["initial"] = s.initial_sampler;
    }
    j["simulate"] = sj;
  }
  if (c.eval) j["eval"] = {{"positions", c.eval->positions}};
  if (c.validate) j["validate"] = {{"suite", c.validate->suite}};
  return j;
}

ModelParams model_params(const ModelConfig& mc, const std::filesystem::path& base_dir) {
  ModelParams m;
  m.chi = mc.chi;
  m.N = mc.N;
  m.d = mc.d;
  m.non_paper_regime = mc.non_paper_regime;
  if (!mc.kernel.table.empty()) {
    std::filesystem::path table = mc.kernel.table;
    if (table.is_relative()) table = base_dir / table;
    m.kernel = make_tabulated_kernel(mc.kernel.name.empty() ? "tabulated" : mc.kernel.name,
                                     read_kernel_table(table));
  } else {
    m.kernel = make_kernel(mc.kernel.name, mc.kernel.params);
  }
  m.validate();
  return m;
}

SimulationParams simulation_params(const ModelParams& m, const SimulateConfig& s,
                                   std::uint64_t seed) {
  SimulationParams p;
  p.model = m;
  p.dt = s.dt;
  p.t_end = s.t_end;
  p.scheme = scheme_from_string(s.scheme);
  p.taming_on = s.taming_on;
  p.master_seed = seed;
  p.replicas = s.replicas;
  p.absorb_min_dist = s.absorb_min_dist;
  p.absorb_radius = s.absorb_radius;
  p.record_stride = s.record_stride;
  p.validate();
  return p;
}

std::string git_blob_hash(const std::string& content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob += content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"aggdiff: N-particle aggregation-diffusion laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  bool strict = false;
  unsigned threads = 1;
  app.add_option("--config", config_path, "Run configuration JSON");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--strict", strict, "Exit 2 when any verdict is inconclusive");
  app.add_option("--threads", threads, "Worker threads (affects wall time only)")
      ->check(CLI::PositiveNumber);

  auto* analyze_cmd = app.add_subcommand("analyze", "Write a condition certificate");
  auto* simulate_cmd = app.add_subcommand("simulate", "Run the particle system");
  auto* validate_cmd = app.add_subcommand("validate", "Run the numerical oracle suites");
  std::string suite;
  bool negative = false;
  validate_cmd->add_option("--suite", suite, "drift|symmetry|intertwine|lemma|martingale|all");
  validate_cmd->add_flag("--selftest-negative", negative, "Flip the drift sign (negative control)");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate weight, drift and potential");
  std::string eval_what, eval_configuration;
  eval_cmd->add_option("--what", eval_what, "Print only one quantity")
      ->check(CLI::IsMember({"drift", "logweight", "potential"}));
  eval_cmd->add_option("--configuration", eval_configuration, "Configuration JSON");
  auto* plot_cmd = app.add_subcommand("plot", "Render SVG charts from outputs");
  std::vector<std::string> inputs;
  plot_cmd->add_option("--input", inputs, "Trajectory CSV or summary JSON")->required();

  std::vector<const char*> argv;
  argv.push_back("aggdiff");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    Globals g;
    g.config_path = config_path;
    if (seed_opt->count() > 0) g.seed = seed;
    g.out_dir = out_dir;
    g.strict = strict;
    g.threads = threads;
    if (!config_path.empty()) {
      g.config_text = read_file(config_path);
      json j;
      try {
        j = json::parse(g.config_text);
      } catch (const json::parse_error& e) {
        throw ConfigError(config_path + ": invalid JSON: " + e.what());
      }
      g.config = run_config_from_json(j);
    }
    if (*analyze_cmd) return cmd_analyze(g, out);
    if (*simulate_cmd) return cmd_simulate(g, out);
    if (*validate_cmd) return cmd_validate(g, suite, negative, out);
    if (*eval_cmd) return cmd_eval(g, eval_configuration, eval_what, out);
    if (*plot_cmd) return cmd_plot(g, inputs, out);
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InadmissibleState& e) {
    err << "inadmissible initial state: " << e.what() << "\n";
    return 1;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 1;
  } catch (const PreconditionError& e) {
    err << "precondition error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace aggdiff
