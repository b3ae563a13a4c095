#pragma once

#include <functional>
#include <span>
#include <vector>

#include "aggdiff/config_space.hpp"
#include "aggdiff/kernels.hpp"

namespace aggdiff {

/// Model parameters: sensitivity chi, particle count N, dimension d, kernel.
struct ModelParams {
  double chi = 1.0;
  int N = 2;
  int d = 2;
  KernelSpec kernel = make_log_kernel();
  bool non_paper_regime = false;

  /// Throws ParameterError unless chi > 0, N >= 2, d >= 2 (d >= 1 with the flag).
  void validate() const;
};

/// b(x) = grad m / m at a configuration, N x d row-major.
struct DriftVector {
  int N = 0;
  int d = 0;
  std::vector<double> components;

  std::span<const double> particle(int k) const {
    return std::span<const double>(components).subspan(static_cast<std::size_t>(k) * d, d);
  }
  double norm() const;
};

/// log m(x) = -(chi/N) sum_{i != j} k(|x^i - x^j|), summed over ordered pairs.
/// Coincident pairs are allowed only when k(0+) is finite.
double log_weight(const Configuration& c, const ModelParams& p);

/// log_weight on a flat coordinate vector of length N*d.
double log_weight(std::span<const double> x, const ModelParams& p);

struct WeightValue {
  double value;
  bool saturated;  // exp over/underflowed to +inf or 0
};

/// m(x) itself, exponentiated on demand.
WeightValue weight_value(const Configuration& c, const ModelParams& p);

/// b^k = -(2 chi/N) sum_{i != k} k'(r_ik) (x^k - x^i) / r_ik.
///
/// Increasing kernels (chi > 0) pull particles together; decreasing kernels
/// push them apart. Components sum to zero. Throws SingularConfiguration on
/// any coincident pair.
DriftVector drift(const Configuration& c, const ModelParams& p);
DriftVector drift(std::span<const double> x, const ModelParams& p);

/// Ground-state potential V = Lap(phi)/phi with phi = sqrt(m):
///   V = (1/2) Lap log m + (1/4) |grad log m|^2,
/// using Lap_x k(|x^i - x^j|) = 2 (k'' + (d-1) k'/r) over the full space.
double potential(const Configuration& c, const ModelParams& p);
double potential(std::span<const double> x, const ModelParams& p);

/// Scalar function on configuration space with optional exact derivatives.
/// Missing gradient/laplacian fall back to 4th-order finite differences.
struct SmoothFunction {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  std::function<double(std::span<const double>)> laplacian;

  double eval(std::span<const double> x) const { return value(x); }
  std::vector<double> grad(std::span<const double> x) const;
  double lap(std::span<const double> x) const;
};

enum class GeneratorMode {
  DirichletHalf,  // (1/2) Lap u + (1/2) b . grad u  (the Dirichlet operator)
  SdeFull,        // Lap u + b . grad u  (generator of dX = sqrt(2) dW + b dt)
};

double apply_generator(const SmoothFunction& u, const Configuration& c, const ModelParams& p,
                       GeneratorMode mode = GeneratorMode::DirichletHalf);
double apply_generator(const SmoothFunction& u, std::span<const double> x, const ModelParams& p,
                       GeneratorMode mode = GeneratorMode::DirichletHalf);

}  // namespace aggdiff
