#pragma once

#include <span>
#include <vector>

namespace aggdiff::fd {

// Central-difference stencils on functions R^n -> R.  The step h is applied
// to each coordinate in turn; `x` is copied so callers keep their point.

/// Second-order central gradient.
template <class F>
std::vector<double> gradient2(const F& f, std::span<const double> x, double h) {
  std::vector<double> p(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double x0 = p[a];
    p[a] = x0 + h;
    const double fp = f(std::span<const double>(p));
    p[a] = x0 - h;
    const double fm = f(std::span<const double>(p));
    p[a] = x0;
    g[a] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Fourth-order central gradient.
template <class F>
std::vector<double> gradient4(const F& f, std::span<const double> x, double h) {
  std::vector<double> p(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double x0 = p[a];
    double v[4];
    const double off[4] = {2.0 * h, h, -h, -2.0 * h};
    for (int s = 0; s < 4; ++s) {
      p[a] = x0 + off[s];
      v[s] = f(std::span<const double>(p));
    }
    p[a] = x0;
    g[a] = (-v[0] + 8.0 * v[1] - 8.0 * v[2] + v[3]) / (12.0 * h);
  }
  return g;
}

/// Fourth-order central Laplacian.
template <class F>
double laplacian4(const F& f, std::span<const double> x, double h) {
  std::vector<double> p(x.begin(), x.end());
  const double f0 = f(std::span<const double>(p));
  double lap = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double x0 = p[a];
    double v[4];
    const double off[4] = {2.0 * h, h, -h, -2.0 * h};
    for (int s = 0; s < 4; ++s) {
      p[a] = x0 + off[s];
      v[s] = f(std::span<const double>(p));
    }
    p[a] = x0;
    lap += (-v[0] + 16.0 * v[1] - 30.0 * f0 + 16.0 * v[2] - v[3]) / (12.0 * h * h);
  }
  return lap;
}

}  // namespace aggdiff::fd
