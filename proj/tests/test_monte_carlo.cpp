#include <doctest.h>

#include <cmath>
#include <random>

#include "aggdiff/errors.hpp"
#include "aggdiff/monte_carlo.hpp"

using namespace aggdiff;
using doctest::Approx;

TEST_CASE("constant integrand gives the ball volume") {
  const auto e = integrate_over_ball(4, 1.0, 5000, 1, [](std::span<const double>) { return 0.0; });
  CHECK(e.estimate == Approx(M_PI * M_PI / 2.0).epsilon(1e-12));
  CHECK(e.std_error == Approx(0.0));
  CHECK(e.samples == 5000);
  CHECK(e.finiteness == Finiteness::Finite);
}

TEST_CASE("second moment over the disc") {
  auto f = [](std::span<const double> x) { return std::log(x[0] * x[0] + x[1] * x[1]); };
  const auto e = integrate_over_ball(2, 1.0, 40000, 2, f);
  CHECK(std::abs(e.estimate - M_PI / 2.0) <= 4.0 * e.std_error);
  CHECK(e.std_error < 0.02);
}

TEST_CASE("result is independent of thread count") {
  auto f = [](std::span<const double> x) { return -x[0] * x[0] + 0.3 * x[1]; };
  const auto a = integrate_over_ball(3, 0.7, 10000, 5, f, 1);
  const auto b = integrate_over_ball(3, 0.7, 10000, 5, f, 4);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(a.tail_index == b.tail_index);
}

TEST_CASE("singular samples are rejected and counted") {
  auto f = [](std::span<const double> x) -> double {
    if (x[0] > 0.0) throw SingularConfiguration("half space");
    return 0.0;
  };
  const auto e = integrate_over_ball(2, 1.0, 10000, 3, f);
  CHECK(e.rejected > 4500);
  CHECK(e.rejected < 5500);
}

TEST_CASE("Hill tail index recovers a Pareto exponent") {
  std::mt19937_64 eng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double alpha : {0.5, 1.5, 3.0}) {
    std::vector<double> logs;
    for (int i = 0; i < 40000; ++i) logs.push_back(-std::log(1.0 - u(eng)) / alpha);
    CHECK(hill_tail_index(logs) == Approx(alpha).epsilon(0.15));
  }
  CHECK(finiteness_from_tail(1.5) == Finiteness::Finite);
  CHECK(finiteness_from_tail(0.5) == Finiteness::Infinite);
  CHECK(finiteness_from_tail(1.0) == Finiteness::Undetermined);
}

TEST_CASE("heavy-tailed integrand is flagged infinite") {
  // |x|^-3 in the plane is not integrable at 0
  auto f = [](std::span<const double> x) { return -1.5 * std::log(x[0] * x[0] + x[1] * x[1]); };
  CHECK(integrate_over_ball(2, 1.0, 40000, 6, f).finiteness == Finiteness::Infinite);
  // |x|^-1 in the plane is integrable with a light enough tail
  auto g = [](std::span<const double> x) { return -0.5 * std::log(x[0] * x[0] + x[1] * x[1]); };
  CHECK(integrate_over_ball(2, 1.0, 40000, 7, g).finiteness == Finiteness::Finite);
}
