#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace aggdiff {

enum class Monotonicity { Increasing, Decreasing };

/// Behaviour of k(r) as r -> 0+.
struct LimitAtZero {
  enum class Kind { MinusInfinity, PlusInfinity, Finite };
  Kind kind = Kind::Finite;
  double value = 0.0;  // meaningful only for Finite

  static LimitAtZero minus_infinity() { return {Kind::MinusInfinity, 0.0}; }
  static LimitAtZero plus_infinity() { return {Kind::PlusInfinity, 0.0}; }
  static LimitAtZero finite(double v) { return {Kind::Finite, v}; }

  bool singular() const { return kind != Kind::Finite; }
};

std::string to_string(Monotonicity m);
std::string to_string(LimitAtZero::Kind k);

/// Radial interaction kernel k(r) with its first two radial derivatives.
///
/// Immutable once built. Every evaluation rejects r <= 0 (and r beyond the
/// kernel's upper domain bound) with a DomainError; singular behaviour at
/// the origin is described by limit_at_zero() instead of returning infinities.
class KernelSpec {
 public:
  using RadialFn = std::function<double(double)>;

  KernelSpec(std::string name, RadialFn eval, RadialFn deriv1, RadialFn deriv2,
             Monotonicity monotonicity, LimitAtZero limit,
             std::map<std::string, double> params = {},
             double domain_max = std::numeric_limits<double>::infinity());

  const std::string& name() const { return name_; }
  const std::map<std::string, double>& params() const { return params_; }
  Monotonicity monotonicity() const { return monotonicity_; }
  LimitAtZero limit_at_zero() const { return limit_; }
  /// Exclusive upper bound of the radial domain (infinity for most kernels).
  double domain_max() const { return domain_max_; }

  bool increasing() const { return monotonicity_ == Monotonicity::Increasing; }
  bool singular_at_zero() const { return limit_.singular(); }

  double eval(double r) const;
  double deriv1(double r) const;
  double deriv2(double r) const;

 private:
  void check_domain(double r) const;

  std::string name_;
  RadialFn eval_;
  RadialFn deriv1_;
  RadialFn deriv2_;
  Monotonicity monotonicity_;
  LimitAtZero limit_;
  std::map<std::string, double> params_;
  double domain_max_;
};

/// k(r) = log r.
KernelSpec make_log_kernel();

/// k(r) = r^(1-alpha) / (1-alpha), alpha in (0,1).
KernelSpec make_power_kernel(double alpha);

/// k(r) = r^(-beta), beta > 0.
KernelSpec make_inverse_power_kernel(double beta);

/// k(r) = r^-2 (-log r)^-alpha on (0,1). Classifier test input only.
KernelSpec make_log_power_kernel(double alpha);

/// One row of a tabulated kernel.
struct KernelSample {
  double r;
  double k;
  double kp;
  double kpp;
};

/// Kernel interpolated from samples (strictly increasing r > 0).
///
/// Uses quintic Hermite interpolation in s = log r so eval/deriv1/deriv2
/// are exact derivatives of one C2 function and reproduce the samples.
/// Outside the table the kernel continues linearly in log r.
KernelSpec make_tabulated_kernel(std::string name, std::vector<KernelSample> samples);

/// k == 0, built through the tabulated path.
KernelSpec make_zero_kernel();

/// Reads a CSV with header row and columns r,k,kp,kpp.
std::vector<KernelSample> read_kernel_table(const std::filesystem::path& path);

/// Builds a kernel from its CLI name ("log", "power", "inverse_power",
/// "log_power", "zero") and named parameters. Throws ParameterError when a
/// required parameter is missing.
KernelSpec make_kernel(const std::string& name, const std::map<std::string, double>& params);

}  // namespace aggdiff
