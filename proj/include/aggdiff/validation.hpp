#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggdiff/analysis.hpp"
#include "aggdiff/monte_carlo.hpp"
#include "aggdiff/simulator.hpp"
#include "aggdiff/weight.hpp"

namespace aggdiff {

/// Compactly supported test function on configuration space.
///
/// The support is contained in the box [lo, hi], which in turn lies inside
/// the ball B(center, radius).
struct TestFunction {
  SmoothFunction f;
  std::vector<double> center;
  double radius = 0.0;
  std::vector<double> lo;
  std::vector<double> hi;
  std::string smoothness;

  double value(std::span<const double> x) const { return f.eval(x); }
};

/// exp(-1/(1-s)) with s = |x-c|^2 / R^2, zero for s >= 1.
TestFunction radial_bump(std::vector<double> center, double radius);

/// P(x) prod_l (1 - t_l^2)^K on the box c +- h, t_l = (x_l - c_l)/h_l, with
/// P(x) = 1 + sum_l a_l (x_l - c_l). Polynomial inside the box.
TestFunction box_bump(std::vector<double> center, std::vector<double> half_width, int power,
                      std::vector<double> modulation = {});

/// Largest relative deviation of the test function's gradient/Laplacian from
/// finite differences of its value at `points` random interior points.
double check_test_function(const TestFunction& u, int points, std::uint64_t seed);

/// Worst relative error between drift() and finite differences of log_weight
/// over `trials` random configurations with min pair distance >= 0.1.
/// `flip_sign` negates the analytic drift (negative control).
double check_drift_gradient(const ModelParams& m, int trials, std::uint64_t seed,
                            bool flip_sign = false);

/// Minimum pair distance over the box lo <= x <= hi.
double box_min_pair_distance(std::span<const double> lo, std::span<const double> hi, int N,
                             int d);

/// |A - B| / max(|A|, |B|, floor) with A = \int u D v dmu, B = \int v D u dmu,
/// by Gauss-Legendre tensor quadrature over the intersection of the supports.
/// Requires N*d <= 6 and a box with min pair distance >= 0.1.
double check_mu_symmetry(const ModelParams& m, const TestFunction& u, const TestFunction& v,
                         int grid_points_per_axis, unsigned threads = 1);

struct IntertwiningResult {
  double max_error = 0.0;
  int evaluated = 0;
  int skipped = 0;  // singular points
};

/// phi D (phi^-1 u) against (1/2) Lap u - (1/2) V u at random points in the
/// support of u. The left side uses drift() and finite differences of
/// log_weight; the right side uses potential().
IntertwiningResult check_intertwining(const ModelParams& m, const TestFunction& u, int points,
                                      std::uint64_t seed);

struct LemmaL2Result {
  BallEstimate lhs;                // \int_{B(0,delta)} |Lap phi|^2 dx
  IntegrabilityReport rhs_report;  // radial surrogate
  bool consistent = true;          // finiteness agreement
};

LemmaL2Result check_lemma_L2(const ModelParams& m, double delta, long long samples,
                             std::uint64_t seed, const ClassifierOptions& opts = {},
                             unsigned threads = 1);

struct MartingaleResult {
  double mean = 0.0;       // mean residual over surviving replicas
  double std_error = 0.0;
  double z = 0.0;
  double absorbed_fraction = 0.0;
  long long survivors = 0;
  bool inconclusive = false;  // absorption above 1%
};

/// Residual u(X_T) - u(x0) - sum (Lap u + b . grad u)(X_s) dt over replicas
/// started at x0, using the simulator's step().
MartingaleResult check_martingale(const SimulationParams& p, const Configuration& x0,
                                  const TestFunction& u, unsigned threads = 1);

struct ValidationOutcome {
  std::string suite;
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool inconclusive = false;
  std::string detail;
};

struct ValidationOptions {
  std::uint64_t seed = 42;
  unsigned threads = 1;
  bool selftest_negative = false;
  /// Replaces the default model of the main case in each suite.
  std::optional<ModelParams> model;
};

inline const std::vector<std::string> kValidationSuites = {"drift", "symmetry", "intertwine",
                                                          "lemma", "martingale"};

/// Runs one suite by name, or every suite for "all".
std::vector<ValidationOutcome> run_validation(const std::string& suite,
                                              const ValidationOptions& opts);

nlohmann::json to_json(const ValidationOutcome& o);

}  // namespace aggdiff
