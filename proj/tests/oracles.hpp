#pragma once

// Brute-force reference implementations used only by tests.

#include <random>
#include <vector>

#include "aggdiff/config_space.hpp"

namespace oracle {

/// E_q by the subset definition: every size-q subset K has sum_{i,j in K} |x^i - x^j|^2 > 0.
inline bool in_Eq_subsets(const aggdiff::Configuration& c, int q) {
  const int n = c.particles();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != q) continue;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (int j = 0; j < n; ++j) {
        if (!(mask >> j & 1u)) continue;
        for (int l = 0; l < c.dim(); ++l) {
          const double dx = c.at(i, l) - c.at(j, l);
          s += dx * dx;
        }
      }
    }
    if (!(s > 0.0)) return false;
  }
  return true;
}

/// Random configuration whose particles sit on a small pool of sites, so
/// exact coincidences of every multiplicity occur.
inline aggdiff::Configuration coincident_configuration(std::mt19937_64& eng, int N, int d) {
  std::uniform_int_distribution<int> pool_size(1, N);
  const int sites = pool_size(eng);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> pool(sites, std::vector<double>(d));
  for (auto& p : pool) {
    for (double& v : p) v = g(eng);
  }
  std::uniform_int_distribution<int> pick(0, sites - 1);
  std::vector<double> x;
  for (int i = 0; i < N; ++i) {
    const auto& p = pool[pick(eng)];
    x.insert(x.end(), p.begin(), p.end());
  }
  return aggdiff::Configuration(N, d, x, d < 2);
}

}  // namespace oracle
