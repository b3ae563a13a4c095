#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aggdiff/monte_carlo.hpp"
#include "aggdiff/weight.hpp"

namespace aggdiff {

enum class Verdict { Convergent, Divergent, Inconclusive };
std::string to_string(Verdict v);

/// Evidence for the convergence of \int_0^delta f(r) dr at r -> 0.
struct IntegrabilityReport {
  Verdict verdict = Verdict::Inconclusive;
  /// I(eps_j) = \int_{eps_j}^{delta} f, eps_j = delta 2^-j, j = 0..levels.
  std::vector<double> partial_values;
  /// a in f(r) ~ c r^-a, from a log-log fit of the last shells.
  double fitted_exponent = 0.0;
  /// Half-width of the confidence band on fitted_exponent (3 standard errors).
  double exponent_band = 0.0;
  double delta = 1.0;
  /// Partial value plus geometric tail, when Convergent; +inf when Divergent.
  double limit_estimate = 0.0;
  std::string diagnostic;
};

struct ClassifierOptions {
  double delta = 1.0;
  int levels = 40;
  double margin = 0.01;    // Inconclusive band around exponent 1
  int fit_window = 8;      // shells used by the exponent regression
  int ratio_window = 5;    // shells used by the Cauchy-ratio test
  double shell_tol = 1e-10;
};

/// Classifies \int_0^delta f(r) dr by dyadic shells [eps_{j+1}, eps_j], each
/// integrated with adaptive Gauss-Kronrod (7/15).
///
/// f must be nonnegative; NaN or negative values throw InputError.
IntegrabilityReport classify_improper_integral(const std::function<double(double)>& f,
                                               const ClassifierOptions& opts = {});

/// [H]_p: \int_0 |k'(t)|^p exp(-(chi/N) k(t)) t^{d-1} dt.
IntegrabilityReport check_Hp(double p, const ModelParams& m, const ClassifierOptions& opts = {});

struct NkResult {
  std::optional<int> value;
  /// Set when an Inconclusive verdict sits at the boundary: n_k in [lo, hi].
  std::optional<std::pair<int, int>> ambiguous_range;
  std::map<int, IntegrabilityReport> reports;  // n -> report for the integral below
};

/// n_k = max{ n in [2, N+1] : \int_0 exp(-(n chi/(d N)) k(r)) dr < inf }.
NkResult compute_nk(const ModelParams& m, const ClassifierOptions& opts = {});

struct RadonResult {
  bool applicable = true;
  std::optional<int> n_k;
  /// Radon on E_{n_k}: the defining integral's verdict at n = n_k.
  std::optional<Verdict> on_E_nk;
  /// Divergence integral exp(-(n_k(n_k-1) chi/N) k(r)) r^{d(n_k-2)};
  /// Divergent certifies "not Radon on E_{n_k+1}". Empty when n_k = N+1.
  std::optional<IntegrabilityReport> failure_on_E_nk_plus_1;
  /// Decreasing kernel, or n_k = N+1: Radon on the whole space.
  bool radon_everywhere = false;
};

RadonResult check_radon(const ModelParams& m, const ClassifierOptions& opts = {});

struct ClosabilityResult {
  Verdict verdict = Verdict::Inconclusive;
  std::map<int, IntegrabilityReport> reports;  // c -> report
  bool review_flag = false;
  static constexpr const char* label = "heuristic";
};

/// Local integrability surrogate for 1/m: \int_0 exp(+(c chi/N) k(r)) r^{d-1} dr
/// for c in {2, 2(N-1)}.
ClosabilityResult check_closability(const ModelParams& m, const ClassifierOptions& opts = {});

struct H2Result {
  BallEstimate lhs;                // \int_{B(0,delta)} |b|^p m dx
  IntegrabilityReport rhs_report;  // [H]_p integrand
  double rhs_value = 0.0;          // (limit)^(p/2), +inf when Divergent
  double ratio = 0.0;              // lhs / rhs when both finite
  bool consistent = true;          // finiteness agreement
};

/// H2 comparison. Requires p > 1, delta > 0, N*d <= 12.
H2Result check_h2(const ModelParams& m, double p, double delta, long long samples,
                  std::uint64_t seed, const ClassifierOptions& opts = {}, unsigned threads = 1);

/// \int_0 [(k'' + (d-1)k'/t)^2 + (k')^4] exp(-(chi/N) k(t)) t^{d-1} dt.
IntegrabilityReport check_schrodinger_condition(const ModelParams& m,
                                                const ClassifierOptions& opts = {});

/// Finiteness agreement between a Monte Carlo side and a 1-d classifier side.
bool finiteness_consistent(Finiteness lhs, Verdict rhs);

struct CertificateOptions {
  ClassifierOptions classifier;
  std::vector<double> p_values;  // empty: {d N + 1}
  double h2_p = 0.0;             // <= 0: first p value
  double h2_delta = 1.0;
  long long h2_samples = 20000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct ConditionCertificate {
  ModelParams model;
  std::map<double, IntegrabilityReport> hp;
  bool hp_hypothesis_satisfied = false;  // some p > dN is Convergent
  NkResult n_k;
  RadonResult radon;
  ClosabilityResult closability;
  std::optional<H2Result> h2;  // empty when N*d > 12
  double h2_p = 0.0;
  IntegrabilityReport schrodinger_condition;
  std::string kato_comment;
  std::uint64_t seed = 0;

  /// Any verdict in the certificate is Inconclusive (or n_k is ambiguous).
  bool any_inconclusive() const;
};

ConditionCertificate analyze(const ModelParams& m, const CertificateOptions& opts = {});

nlohmann::json to_json(const IntegrabilityReport& r);
nlohmann::json to_json(const ConditionCertificate& c);
std::string text_report(const ConditionCertificate& c);

inline constexpr int kCertificateSchemaVersion = 1;

}  // namespace aggdiff
