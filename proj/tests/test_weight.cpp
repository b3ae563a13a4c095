#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "aggdiff/errors.hpp"
#include "aggdiff/finite_difference.hpp"
#include "aggdiff/weight.hpp"

using namespace aggdiff;
using doctest::Approx;

namespace {

ModelParams model(double chi, int N, int d, KernelSpec k) {
  ModelParams m;
  m.chi = chi;
  m.N = N;
  m.d = d;
  m.kernel = std::move(k);
  return m;
}

std::vector<double> random_separated(std::mt19937_64& eng, int N, int d, double min_dist) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<double> x(static_cast<std::size_t>(N) * d);
  for (;;) {
    for (double& v : x) v = u(eng);
    if (min_pair_distance(Configuration(N, d, x)) >= min_dist) return x;
  }
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

TEST_CASE("model parameter validation") {
  CHECK_THROWS_AS(model(0.0, 2, 2, make_log_kernel()).validate(), ParameterError);
  CHECK_THROWS_AS(model(1.0, 1, 2, make_log_kernel()).validate(), ParameterError);
  CHECK_THROWS_AS(model(1.0, 2, 1, make_log_kernel()).validate(), ParameterError);
  auto m = model(1.0, 2, 1, make_log_kernel());
  m.non_paper_regime = true;
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("log weight examples") {
  const Configuration c(2, 2, {0, 0, 0.3, 0.4});
  CHECK(log_weight(c, model(1.7, 2, 2, make_zero_kernel())) == 0.0);
  for (double chi : {0.1, 1.0, 5.0}) {
    CHECK(log_weight(Configuration(2, 2, {0, 0, 1, 0}), model(chi, 2, 2, make_log_kernel())) ==
          Approx(0.0).epsilon(1e-15));
  }
  // -(chi/N) * (ordered pairs) * log e = -(2/2) * 2 * 1
  const double e = std::exp(1.0);
  CHECK(log_weight(Configuration(2, 2, {0, 0, e, 0}), model(2.0, 2, 2, make_log_kernel())) ==
        Approx(-2.0));
}

TEST_CASE("log weight sums over ordered pairs") {
  std::mt19937_64 eng(1);
  const auto m = model(1.3, 4, 3, make_power_kernel(0.4));
  const auto x = random_separated(eng, 4, 3, 0.1);
  const Configuration c(4, 3, x);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i != j) s += m.kernel.eval(pair_distance(c, i, j));
    }
  }
  CHECK(log_weight(c, m) == Approx(-(1.3 / 4) * s));
}

TEST_CASE("coincident pairs") {
  const Configuration c(2, 2, {0.2, 0.2, 0.2, 0.2});
  CHECK_THROWS_AS(log_weight(c, model(1, 2, 2, make_log_kernel())), SingularConfiguration);
  CHECK_THROWS_AS(drift(c, model(1, 2, 2, make_log_kernel())), SingularConfiguration);
  CHECK_THROWS_AS(potential(c, model(1, 2, 2, make_log_kernel())), SingularConfiguration);
  CHECK(log_weight(c, model(1, 2, 2, make_power_kernel(0.5))) == 0.0);
  CHECK_THROWS_AS(drift(c, model(1, 2, 2, make_power_kernel(0.5))), SingularConfiguration);
}

TEST_CASE("weight value saturates instead of overflowing") {
  const auto m = model(1000.0, 2, 2, make_log_kernel());
  const auto w = weight_value(Configuration(2, 2, {0, 0, 1e-3, 0}), m);
  CHECK(w.saturated);
  CHECK(std::isinf(w.value));
  const auto ok = weight_value(Configuration(2, 2, {0, 0, 2, 0}), model(1.0, 2, 2, make_log_kernel()));
  CHECK_FALSE(ok.saturated);
  CHECK(ok.value == Approx(0.5));
}

TEST_CASE("drift examples") {
  const auto b = drift(Configuration(2, 2, {0, 0, 1, 0}), model(2.0, 2, 2, make_log_kernel()));
  CHECK(b.particle(0)[0] == Approx(2.0));
  CHECK(b.particle(0)[1] == Approx(0.0));
  CHECK(b.particle(1)[0] == Approx(-2.0));
  CHECK(b.particle(1)[1] == Approx(0.0));

  const auto z = drift(Configuration(3, 2, {0, 0, 1, 0, 0, 2}), model(1.0, 3, 2, make_zero_kernel()));
  for (double v : z.components) CHECK(v == 0.0);

  // repulsive for a decreasing kernel
  const auto r = drift(Configuration(2, 2, {0, 0, 1, 0}), model(1.0, 2, 2, make_inverse_power_kernel(1.0)));
  CHECK(r.particle(0)[0] < 0.0);
  CHECK(r.particle(1)[0] > 0.0);
}

TEST_CASE("drift components sum to zero") {
  std::mt19937_64 eng(2);
  for (int N : {2, 3, 5}) {
    for (int d : {2, 3}) {
      const auto x = random_separated(eng, N, d, 0.05);
      for (const auto& k : {make_log_kernel(), make_power_kernel(0.5), make_inverse_power_kernel(1.0)}) {
        const auto b = drift(x, model(1.0, N, d, k));
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int i = 0; i < N; ++i) s += b.particle(i)[l];
          CHECK(std::abs(s) <= 1e-12 * std::max(1.0, b.norm()));
        }
      }
    }
  }
}

TEST_CASE("drift is the gradient of log weight") {
  std::mt19937_64 eng(3);
  for (int N : {2, 3, 5}) {
    for (int d : {2, 3}) {
      for (const auto& k : {make_log_kernel(), make_inverse_power_kernel(1.0)}) {
        const auto m = model(1.0, N, d, k);
        for (int t = 0; t < 20; ++t) {
          const auto x = random_separated(eng, N, d, 0.1);
          const double h = 1e-5 * (1.0 + norm(x));
          const auto g = fd::gradient2([&](std::span<const double> y) { return log_weight(y, m); }, x, h);
          const auto b = drift(x, m);
          std::vector<double> diff(g.size());
          for (std::size_t a = 0; a < g.size(); ++a) diff[a] = b.components[a] - g[a];
          CHECK(norm(diff) / norm(g) <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("translation and permutation symmetry") {
  std::mt19937_64 eng(4);
  const auto m = model(0.8, 4, 2, make_log_kernel());
  const auto x = random_separated(eng, 4, 2, 0.1);
  auto shifted = x;
  for (int i = 0; i < 4; ++i) {
    shifted[2 * i] += 3.25;
    shifted[2 * i + 1] -= 1.5;
  }
  CHECK(log_weight(shifted, m) == Approx(log_weight(x, m)).epsilon(1e-12));
  const auto b0 = drift(x, m), b1 = drift(shifted, m);
  for (std::size_t a = 0; a < b0.components.size(); ++a) {
    CHECK(b1.components[a] == Approx(b0.components[a]).epsilon(1e-9));
  }
  const std::vector<int> perm = {2, 0, 3, 1};
  std::vector<double> y;
  for (int i : perm) y.insert(y.end(), x.begin() + 2 * i, x.begin() + 2 * i + 2);
  const auto bp = drift(y, m);
  for (int k = 0; k < 4; ++k) {
    for (int l = 0; l < 2; ++l) CHECK(bp.particle(k)[l] == Approx(b0.particle(perm[k])[l]));
  }
  CHECK(log_weight(y, m) == Approx(log_weight(x, m)));
}

TEST_CASE("potential examples") {
  std::mt19937_64 eng(5);
  const auto x = random_separated(eng, 3, 2, 0.1);
  CHECK(potential(x, model(1.0, 3, 2, make_zero_kernel())) == 0.0);

  // log kernel in d = 2: the Laplacian term vanishes, V = |b|^2 / 4
  const auto m = model(1.4, 3, 2, make_log_kernel());
  const double bn = drift(x, m).norm();
  CHECK(potential(x, m) == Approx(0.25 * bn * bn).epsilon(1e-12));
}

TEST_CASE("potential matches finite-difference Lap(phi)/phi") {
  std::mt19937_64 eng(6);
  for (const auto& m : {model(1.0, 2, 3, make_power_kernel(0.5)), model(0.7, 3, 2, make_log_kernel()),
                        model(1.0, 2, 3, make_inverse_power_kernel(1.0))}) {
    for (int t = 0; t < 10; ++t) {
      const auto x = random_separated(eng, m.N, m.d, 0.3);
      const double L0 = log_weight(x, m);
      auto phi = [&](std::span<const double> y) { return std::exp(0.5 * (log_weight(y, m) - L0)); };
      const double fdV = fd::laplacian4(phi, x, 1e-3) / phi(x);
      const double V = potential(x, m);
      CHECK(std::abs(V - fdV) <= 1e-4 * std::max(1.0, std::abs(V)));
    }
  }
}

TEST_CASE("generator modes") {
  const auto m0 = model(1.0, 2, 2, make_zero_kernel());
  const Configuration c(2, 2, {0.1, 0.2, -0.5, 0.9});
  SmoothFunction constant{[](std::span<const double>) { return 3.0; },
                          [](std::span<const double> x) { return std::vector<double>(x.size(), 0.0); },
                          [](std::span<const double>) { return 0.0; }};
  CHECK(apply_generator(constant, c, model(1.0, 2, 2, make_log_kernel())) == 0.0);

  SmoothFunction sq;
  sq.value = [](std::span<const double> x) {
    return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
  };
  CHECK(apply_generator(sq, c, m0, GeneratorMode::DirichletHalf) == Approx(4.0).epsilon(1e-6));
  CHECK(apply_generator(sq, c, m0, GeneratorMode::SdeFull) == Approx(8.0).epsilon(1e-6));
}

TEST_CASE("generator matches finite-difference composition") {
  const auto m = model(1.0, 2, 2, make_log_kernel());
  const std::vector<double> center = {-0.4, 0.1, 0.5, -0.2};
  SmoothFunction gauss;
  gauss.value = [&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) s += (x[a] - center[a]) * (x[a] - center[a]);
    return std::exp(-s);
  };
  gauss.gradient = [&](std::span<const double> x) {
    std::vector<double> g(x.size());
    const double v = gauss.value(x);
    for (std::size_t a = 0; a < x.size(); ++a) g[a] = -2.0 * (x[a] - center[a]) * v;
    return g;
  };
  gauss.laplacian = [&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) s += (x[a] - center[a]) * (x[a] - center[a]);
    return (4.0 * s - 2.0 * x.size()) * gauss.value(x);
  };
  const std::vector<double> x = {-0.3, 0.0, 0.6, 0.1};
  auto L = [&](std::span<const double> y) { return log_weight(y, m); };
  const auto gL = fd::gradient4(L, x, 1e-4);
  const auto gu = fd::gradient4(gauss.value, x, 1e-4);
  double expect = 0.5 * fd::laplacian4(gauss.value, x, 1e-3);
  for (std::size_t a = 0; a < x.size(); ++a) expect += 0.5 * gL[a] * gu[a];
  CHECK(apply_generator(gauss, x, m) == Approx(expect).epsilon(1e-6));
}
