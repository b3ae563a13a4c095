#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggdiff/analysis.hpp"
#include "aggdiff/simulator.hpp"
#include "aggdiff/weight.hpp"

namespace aggdiff {

/// Bad run configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kRunConfigSchemaVersion = 1;

struct KernelDescriptor {
  std::string name;
  std::map<std::string, double> params;
  std::string table;  // CSV path; replaces name/params when set
  friend bool operator==(const KernelDescriptor&, const KernelDescriptor&) = default;
};

struct ModelConfig {
  double chi = 1.0;
  int N = 2;
  int d = 2;
  KernelDescriptor kernel;
  bool non_paper_regime = false;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct AnalyzeConfig {
  std::vector<double> p_values;
  double delta = 1.0;
  int levels = 40;
  double margin = 0.01;
  double h2_p = 0.0;
  double h2_delta = 1.0;
  long long h2_samples = 20000;
  friend bool operator==(const AnalyzeConfig&, const AnalyzeConfig&) = default;
};

struct SimulateConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  std::string scheme = "TamedEuler";
  bool taming_on = true;
  int replicas = 1;
  double absorb_min_dist = 1e-6;
  double absorb_radius = 1e3;
  int record_stride = 1;
  int histogram_bins = 20;
  /// Flat N*d positions, or a sampler spec such as "gaussian_iid:0.5".
  std::optional<std::vector<double>> initial_positions;
  std::string initial_sampler;
  friend bool operator==(const SimulateConfig&, const SimulateConfig&) = default;
};

struct EvalConfig {
  std::vector<double> positions;
  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct ValidateConfig {
  std::string suite = "all";
  friend bool operator==(const ValidateConfig&, const ValidateConfig&) = default;
};

struct RunConfig {
  int schema_version = kRunConfigSchemaVersion;
  std::optional<std::uint64_t> seed;
  std::optional<ModelConfig> model;
  std::optional<AnalyzeConfig> analyze;
  std::optional<SimulateConfig> simulate;
  std::optional<EvalConfig> eval;
  std::optional<ValidateConfig> validate;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Strict parse: unknown fields and wrong types throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

/// Builds model parameters; table paths are resolved against base_dir.
ModelParams model_params(const ModelConfig& m, const std::filesystem::path& base_dir = {});
SimulationParams simulation_params(const ModelParams& m, const SimulateConfig& s,
                                   std::uint64_t seed);

/// Git blob hash: sha1("blob <size>\0" + content), lowercase hex.
std::string git_blob_hash(const std::string& content);

/// Runs the command line; returns the process exit code.
///   0 success, 1 usage/config error, 2 inconclusive under --strict,
///   3 numeric failure or failed validation.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aggdiff
