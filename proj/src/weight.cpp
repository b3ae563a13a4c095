#include "aggdiff/weight.hpp"

#include <cmath>
#include <limits>

#include "aggdiff/errors.hpp"
#include "aggdiff/finite_difference.hpp"

namespace aggdiff {

void ModelParams::validate() const {
  if (!(chi > 0.0)) throw ParameterError("chi must be > 0");
  if (N < 2) throw ParameterError("N must be >= 2");
  if (d < 1 || (d < 2 && !non_paper_regime)) {
    throw ParameterError("d must be >= 2 (d = 1 requires non_paper_regime)");
  }
}

double DriftVector::norm() const {
  double s = 0.0;
  for (double v : components) s += v * v;
  return std::sqrt(s);
}

namespace {

void check_shape(std::span<const double> x, const ModelParams& p) {
  if (x.size() != static_cast<std::size_t>(p.N) * p.d) {
    throw ParameterError("coordinate vector has " + std::to_string(x.size()) +
                         " entries, model expects N*d = " + std::to_string(p.N * p.d));
  }
}

void check_shape(const Configuration& c, const ModelParams& p) {
  if (c.particles() != p.N || c.dim() != p.d) {
    throw ParameterError("configuration shape (N=" + std::to_string(c.particles()) +
                         ", d=" + std::to_string(c.dim()) + ") does not match the model");
  }
}

// Distance and unit-free difference vector for pair (i, j), diff = x^i - x^j.
double pair_diff(std::span<const double> x, int d, int i, int j, double* diff) {
  double s = 0.0;
  for (int l = 0; l < d; ++l) {
    diff[l] = x[static_cast<std::size_t>(i) * d + l] - x[static_cast<std::size_t>(j) * d + l];
    s += diff[l] * diff[l];
  }
  return std::sqrt(s);
}

[[noreturn]] void throw_collision(int i, int j) {
  throw SingularConfiguration("particles " + std::to_string(i) + " and " + std::to_string(j) +
                              " coincide");
}

// Coincident pairs exert no force when k is constant near the origin.
bool flat_at_zero(const KernelSpec& k) {
  const double r = 1e-100;
  return !k.singular_at_zero() && k.deriv1(r) == 0.0 && k.deriv2(r) == 0.0;
}

}  // namespace

double log_weight(std::span<const double> x, const ModelParams& p) {
  check_shape(x, p);
  std::vector<double> diff(static_cast<std::size_t>(p.d));
  double sum = 0.0;
  for (int i = 0; i < p.N; ++i) {
    for (int j = i + 1; j < p.N; ++j) {
      const double r = pair_diff(x, p.d, i, j, diff.data());
      if (r == 0.0) {
        const auto lim = p.kernel.limit_at_zero();
        if (lim.singular()) throw_collision(i, j);
        sum += lim.value;
      } else {
        sum += p.kernel.eval(r);
      }
    }
  }
  // Ordered pairs count each unordered pair twice.
  return -(2.0 * p.chi / p.N) * sum;
}

double log_weight(const Configuration& c, const ModelParams& p) {
  check_shape(c, p);
  return log_weight(c.coords(), p);
}

WeightValue weight_value(const Configuration& c, const ModelParams& p) {
  double lw;
  try {
    lw = log_weight(c, p);
  } catch (const SingularConfiguration&) {
    const bool up = p.kernel.limit_at_zero().kind == LimitAtZero::Kind::MinusInfinity;
    return {up ? std::numeric_limits<double>::infinity() : 0.0, true};
  }
  const double v = std::exp(lw);
  return {v, v == 0.0 || std::isinf(v)};
}

DriftVector drift(std::span<const double> x, const ModelParams& p) {
  check_shape(x, p);
  DriftVector b{p.N, p.d, std::vector<double>(x.size(), 0.0)};
  std::vector<double> diff(static_cast<std::size_t>(p.d));
  const double scale = -2.0 * p.chi / p.N;
  for (int i = 0; i < p.N; ++i) {
    for (int j = i + 1; j < p.N; ++j) {
      const double r = pair_diff(x, p.d, i, j, diff.data());
      if (r == 0.0) {
        if (flat_at_zero(p.kernel)) continue;
        throw_collision(i, j);
      }
      const double f = scale * p.kernel.deriv1(r) / r;
      for (int l = 0; l < p.d; ++l) {
        b.components[static_cast<std::size_t>(i) * p.d + l] += f * diff[l];
        b.components[static_cast<std::size_t>(j) * p.d + l] -= f * diff[l];
      }
    }
  }
  return b;
}

DriftVector drift(const Configuration& c, const ModelParams& p) {
  check_shape(c, p);
  return drift(c.coords(), p);
}

double potential(std::span<const double> x, const ModelParams& p) {
  check_shape(x, p);
  std::vector<double> diff(static_cast<std::size_t>(p.d));
  double radial_lap = 0.0;
  for (int i = 0; i < p.N; ++i) {
    for (int j = i + 1; j < p.N; ++j) {
      const double r = pair_diff(x, p.d, i, j, diff.data());
      if (r == 0.0) {
        if (flat_at_zero(p.kernel)) continue;
        throw_collision(i, j);
      }
      radial_lap += p.kernel.deriv2(r) + (p.d - 1) * p.kernel.deriv1(r) / r;
    }
  }
  // Lap log m = -(chi/N) * sum_{ordered} 2 (k'' + (d-1) k'/r)
  const double lap_log_m = -(4.0 * p.chi / p.N) * radial_lap;
  const double bnorm = drift(x, p).norm();
  return 0.5 * lap_log_m + 0.25 * bnorm * bnorm;
}

double potential(const Configuration& c, const ModelParams& p) {
  check_shape(c, p);
  return potential(c.coords(), p);
}

namespace {
double default_fd_step(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return 1e-3 * (1.0 + s);
}
}  // namespace

std::vector<double> SmoothFunction::grad(std::span<const double> x) const {
  if (gradient) return gradient(x);
  return fd::gradient4(value, x, default_fd_step(x));
}

double SmoothFunction::lap(std::span<const double> x) const {
  if (laplacian) return laplacian(x);
  return fd::laplacian4(value, x, default_fd_step(x));
}

double apply_generator(const SmoothFunction& u, std::span<const double> x, const ModelParams& p,
                       GeneratorMode mode) {
  const DriftVector b = drift(x, p);
  const std::vector<double> g = u.grad(x);
  double bg = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) bg += b.components[a] * g[a];
  const double full = u.lap(x) + bg;
  return mode == GeneratorMode::SdeFull ? full : 0.5 * full;
}

double apply_generator(const SmoothFunction& u, const Configuration& c, const ModelParams& p,
                       GeneratorMode mode) {
  check_shape(c, p);
  return apply_generator(u, c.coords(), p, mode);
}

}  // namespace aggdiff
