#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aggdiff/config_space.hpp"
#include "aggdiff/rng.hpp"
#include "aggdiff/weight.hpp"

namespace aggdiff {

enum class Scheme { EulerMaruyama, TamedEuler };
std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct SimulationParams {
  ModelParams model;
  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::TamedEuler;
  bool taming_on = true;
  std::uint64_t master_seed = 0;
  int replicas = 1;
  double absorb_min_dist = 1e-6;
  double absorb_radius = 1e3;
  int record_stride = 1;

  void validate() const;
  /// TamedEuler with taming_on; TamedEuler with taming off is plain Euler.
  bool tamed() const { return scheme == Scheme::TamedEuler && taming_on; }
  long long steps() const;
};

enum class CemeteryCause { None, Collision, Escape };
std::string to_string(CemeteryCause c);

struct Absorbed {
  CemeteryCause cause;
  Configuration state;  // post-step state, or the pre-step state for a pre-step collision
};

/// Per-step diagnostic for under-resolution.
struct StepInfo {
  double max_displacement = 0.0;
};

/// x <- x + drift_increment + sqrt(2 dt) noise.
///
/// drift_increment is b dt (Euler-Maruyama) or b dt / (1 + dt |b|) (tamed).
/// Collisions (min pair distance < absorb_min_dist before or after the step,
/// or a singular drift) and escapes (|x| > absorb_radius) return Absorbed.
std::variant<Configuration, Absorbed> step(const Configuration& state, const SimulationParams& p,
                                           std::span<const double> noise,
                                           StepInfo* info = nullptr);

struct TrajectoryRecord {
  int replica_id = 0;
  std::vector<double> times;
  std::vector<Configuration> states;  // frozen after absorption
  std::vector<double> min_pair_distance;
  std::vector<bool> alive;
  std::optional<double> cemetery_time;
  CemeteryCause cemetery_cause = CemeteryCause::None;
  double max_step_displacement = 0.0;
};

/// Initial state: a fixed configuration or i.i.d. Gaussian positions.
struct InitialSpec {
  std::optional<Configuration> fixed;
  double gaussian_sigma = 0.0;  // used when fixed is empty

  static InitialSpec from_configuration(Configuration c) { return {std::move(c), 0.0}; }
  /// Parses "gaussian_iid:<sigma>".
  static InitialSpec from_sampler(const std::string& spec);
  std::string describe() const;
};

/// Thrown when the initial state is outside the kernel's state space.
class InadmissibleState : public std::runtime_error {
 public:
  InadmissibleState(const std::string& what, int q) : std::runtime_error(what), q_(q) {}
  int q() const { return q_; }

 private:
  int q_;
};

/// State-space index q for the model: n_k for increasing kernels, 2 for
/// decreasing kernels. Falls back to the lower end of an ambiguous n_k range,
/// or 2 when n_k does not exist.
int state_space_q(const ModelParams& m);

/// Throws InadmissibleState when c is not in E_q for q = state_space_q(m).
void check_admissible(const Configuration& c, const ModelParams& m, int q);

/// Engine for replica r: seeded with stream_seed(master_seed, r).
Engine replica_engine(std::uint64_t master_seed, int replica);

/// Draws the initial state for one replica (consumes the replica engine first
/// for sampled starts).
Configuration initial_state(const InitialSpec& init, const ModelParams& m, Engine& eng);

/// Runs all replicas; output is ordered by replica id and independent of `threads`.
std::vector<TrajectoryRecord> run(const SimulationParams& p, const InitialSpec& init,
                                  unsigned threads = 1);

struct EnsembleSummary {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<std::vector<double>> coord_mean;      // [time][N*d], alive replicas
  std::vector<std::vector<double>> coord_variance;  // [time][N*d]
  std::vector<std::vector<double>> center_of_mass;  // [time][d]
  std::vector<std::vector<double>> com_variance;    // [time][d]
  std::vector<double> min_dist_edges;               // histogram bin edges
  std::vector<std::vector<int>> min_dist_histogram; // [time][bin], alive replicas
};

EnsembleSummary ensemble_stats(const std::vector<TrajectoryRecord>& records, int bins = 20);

/// CSV header: t,replica,particle,coord_0..coord_{d-1},min_dist,alive
std::string trajectories_csv(const std::vector<TrajectoryRecord>& records);

nlohmann::json to_json(const EnsembleSummary& s);
nlohmann::json to_json(const SimulationParams& p);

}  // namespace aggdiff
