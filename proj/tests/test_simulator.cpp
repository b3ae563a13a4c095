#include <doctest.h>

#include <cmath>
#include <random>

#include "aggdiff/errors.hpp"
#include "aggdiff/simulator.hpp"

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

SimulationParams params(ModelParams m, double dt, double t_end, int replicas) {
  SimulationParams p;
  p.model = std::move(m);
  p.dt = dt;
  p.t_end = t_end;
  p.replicas = replicas;
  p.master_seed = 1234;
  return p;
}

}  // namespace

TEST_CASE("parameter validation") {
  auto p = params(model(1, 2, 2, make_log_kernel()), 0.1, 0.05, 1);
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = params(model(1, 2, 2, make_log_kernel()), 0.01, 1, 0);
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = params(model(1, 2, 2, make_log_kernel()), 0.01, 1, 1);
  p.record_stride = 0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p.record_stride = 1;
  p.absorb_radius = 1e-7;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  CHECK(scheme_from_string("EulerMaruyama") == Scheme::EulerMaruyama);
  CHECK(to_string(Scheme::TamedEuler) == "TamedEuler");
  CHECK_THROWS_AS(scheme_from_string("Milstein"), ParameterError);
}

TEST_CASE("zero kernel step is a pure Brownian increment") {
  const auto p = params(model(1, 2, 2, make_zero_kernel()), 0.01, 1, 1);
  const Configuration x(2, 2, {0, 0, 1, 1});
  const std::vector<double> noise = {0.3, -1.2, 0.5, 2.0};
  const auto next = std::get<Configuration>(step(x, p, noise));
  for (std::size_t a = 0; a < 4; ++a) {
    CHECK(next.coords()[a] == Approx(x.coords()[a] + std::sqrt(0.02) * noise[a]));
  }
}

TEST_CASE("drift increment converges to b as dt shrinks") {
  const auto m = model(1.0, 3, 2, make_log_kernel());
  const Configuration x(3, 2, {0, 0, 0.4, 0.1, -0.2, 0.5});
  const auto b = drift(x, m);
  const std::vector<double> noise = {0.1, 0.2, -0.3, 0.4, 0.0, -0.5};
  std::vector<double> errors;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    for (Scheme s : {Scheme::EulerMaruyama, Scheme::TamedEuler}) {
      auto p = params(m, dt, 1.0, 1);
      p.scheme = s;
      const auto next = std::get<Configuration>(step(x, p, noise));
      double err = 0.0;
      for (std::size_t a = 0; a < 6; ++a) {
        const double est = (next.coords()[a] - x.coords()[a] - std::sqrt(2 * dt) * noise[a]) / dt;
        err = std::max(err, std::abs(est - b.components[a]));
      }
      if (s == Scheme::EulerMaruyama) {
        CHECK(err <= 1e-9 * b.norm());
      } else {
        errors.push_back(err);
      }
    }
  }
  CHECK(errors[1] < 0.2 * errors[0]);
  CHECK(errors[2] < 0.2 * errors[1]);
  CHECK(errors[2] <= 1e-3 * b.norm());
}

TEST_CASE("tamed drift increment is bounded by one") {
  std::mt19937_64 eng(8);
  std::normal_distribution<double> g(0.0, 1e-3);
  const auto m = model(50.0, 4, 2, make_log_kernel());
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(8);
    for (double& v : x) v = g(eng);
    auto p = params(m, 0.5, 1.0, 1);
    p.absorb_min_dist = 0.0;
    const Configuration c(4, 2, x);
    const std::vector<double> zero(8, 0.0);
    const auto next = step(c, p, zero);
    if (const auto* n = std::get_if<Configuration>(&next)) {
      double s = 0.0;
      for (std::size_t a = 0; a < 8; ++a) s += std::pow(n->coords()[a] - x[a], 2);
      CHECK(std::sqrt(s) < 1.0);
    }
  }
}

TEST_CASE("absorption causes") {
  const std::vector<double> noise(4, 0.0);
  auto p = params(model(1.0, 2, 2, make_log_kernel()), 0.01, 1, 1);
  const auto close = step(Configuration(2, 2, {0, 0, 1e-8, 0}), p, noise);
  REQUIRE(std::holds_alternative<Absorbed>(close));
  CHECK(std::get<Absorbed>(close).cause == CemeteryCause::Collision);

  p.absorb_min_dist = 0.0;
  const auto exact = step(Configuration(2, 2, {0.5, 0.5, 0.5, 0.5}), p, noise);
  REQUIRE(std::holds_alternative<Absorbed>(exact));
  CHECK(std::get<Absorbed>(exact).cause == CemeteryCause::Collision);

  p.absorb_radius = 2.0;
  const auto far = step(Configuration(2, 2, {3, 0, 4, 0}), p, noise);
  REQUIRE(std::holds_alternative<Absorbed>(far));
  CHECK(std::get<Absorbed>(far).cause == CemeteryCause::Escape);
}

TEST_CASE("runs are deterministic and independent of thread count") {
  auto p = params(model(0.5, 3, 2, make_log_kernel()), 0.01, 0.2, 5);
  const auto init = InitialSpec::from_sampler("gaussian_iid:0.7");
  const auto a = trajectories_csv(run(p, init, 1));
  const auto b = trajectories_csv(run(p, init, 1));
  const auto c = trajectories_csv(run(p, init, 4));
  CHECK(a == b);
  CHECK(a == c);
  p.master_seed += 1;
  CHECK(trajectories_csv(run(p, init, 1)) != a);
  CHECK(a.rfind("t,replica,particle,coord_0,coord_1,min_dist,alive\n", 0) == 0);
}

TEST_CASE("record stride and time grid") {
  auto p = params(model(1.0, 2, 2, make_zero_kernel()), 0.01, 0.1, 2);
  p.record_stride = 3;
  const auto recs = run(p, InitialSpec::from_configuration(Configuration(2, 2, {0, 0, 1, 0})));
  REQUIRE(recs.size() == 2);
  const std::vector<double> expect = {0.0, 0.03, 0.06, 0.09, 0.1};
  REQUIRE(recs[0].times.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(recs[0].times[i] == Approx(expect[i]));
  CHECK(recs[0].states.front() == Configuration(2, 2, {0, 0, 1, 0}));
}

TEST_CASE("Brownian limit of the zero kernel") {
  auto p = params(model(1.0, 2, 2, make_zero_kernel()), 0.01, 1.0, 2000);
  p.absorb_min_dist = 0.0;
  const auto recs = run(p, InitialSpec::from_configuration(Configuration(2, 2, {0, 0, 0, 0})));
  const auto s = ensemble_stats(recs);
  const double n = 2000;
  for (std::size_t a = 0; a < 4; ++a) {
    const double mean = s.coord_mean.back()[a];
    const double var = s.coord_variance.back()[a];
    CHECK(std::abs(mean) <= 3.0 * std::sqrt(var / n));
    CHECK(std::abs(var - 2.0) <= 3.0 * std::sqrt(2.0 * 4.0 / (n - 1)));
  }
  // center of mass variance 2t/N per coordinate
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(std::abs(s.com_variance.back()[l] - 1.0) <= 3.0 * std::sqrt(2.0 / (n - 1)));
  }
  for (double v : s.survival) CHECK(v == 1.0);
}

TEST_CASE("repulsive kernel separates particles") {
  auto p = params(model(1.0, 2, 2, make_inverse_power_kernel(1.0)), 1e-3, 0.2, 1000);
  const Configuration x0(2, 2, {-0.25, 0, 0.25, 0});
  const auto rep = run(p, InitialSpec::from_configuration(x0));
  p.model = model(1.0, 2, 2, make_zero_kernel());
  const auto free = run(p, InitialSpec::from_configuration(x0));
  int larger = 0;
  double mean_rep = 0.0, mean_free = 0.0;
  for (std::size_t r = 0; r < rep.size(); ++r) {
    if (rep[r].min_pair_distance.back() > rep[r].min_pair_distance.front()) ++larger;
    mean_rep += rep[r].min_pair_distance.back();
    mean_free += free[r].min_pair_distance.back();
  }
  // one-sided sign test at 1%: z > 2.326
  CHECK((larger - 500.0) / std::sqrt(250.0) > 2.326);
  CHECK(mean_rep > mean_free);
}

TEST_CASE("inadmissible initial states are rejected") {
  auto p = params(model(1.0, 2, 2, make_inverse_power_kernel(1.0)), 0.01, 0.1, 1);
  const Configuration pair(2, 2, {0.3, 0.3, 0.3, 0.3});
  try {
    run(p, InitialSpec::from_configuration(pair));
    FAIL("expected InadmissibleState");
  } catch (const InadmissibleState& e) {
    CHECK(e.q() == 2);
    CHECK(std::string(e.what()).find("E_2") != std::string::npos);
  }
  // log kernel, N = 4, chi = 2.6: n_k = 3, so a triple collision is outside E_3
  p.model = model(2.6, 4, 2, make_log_kernel());
  CHECK(state_space_q(p.model) == 3);
  const Configuration triple(4, 2, {0, 0, 0, 0, 0, 0, 1, 1});
  try {
    run(p, InitialSpec::from_configuration(triple));
    FAIL("expected InadmissibleState");
  } catch (const InadmissibleState& e) {
    CHECK(std::string(e.what()).find("E_3") != std::string::npos);
  }
  // a pair collision is inside E_3: admissible, absorbed at once
  const Configuration pair4(4, 2, {0, 0, 0, 0, 1, 0, 2, 2});
  const auto recs = run(p, InitialSpec::from_configuration(pair4));
  CHECK(recs[0].cemetery_cause == CemeteryCause::Collision);
  CHECK(recs[0].cemetery_time == 0.0);
  CHECK_THROWS_AS(InitialSpec::from_sampler("uniform:1"), ParameterError);
}

TEST_CASE("absorption is permanent and consistent") {
  auto p = params(model(3.0, 3, 2, make_log_kernel()), 0.01, 1.0, 40);
  p.absorb_min_dist = 0.05;
  p.absorb_radius = 4.0;
  const auto recs = run(p, InitialSpec::from_sampler("gaussian_iid:0.3"));
  int absorbed = 0;
  for (const auto& r : recs) {
    bool dead = false;
    for (std::size_t t = 0; t < r.times.size(); ++t) {
      if (dead) CHECK_FALSE(r.alive[t]);
      if (!r.alive[t] && !dead) {
        dead = true;
        REQUIRE(r.cemetery_time.has_value());
        CHECK(r.times[t] >= *r.cemetery_time - 1e-12);
        if (r.cemetery_cause == CemeteryCause::Collision) {
          CHECK(r.min_pair_distance[t] < p.absorb_min_dist);
        } else {
          CHECK(r.states[t].norm() > p.absorb_radius);
        }
      }
    }
    CHECK(dead == r.cemetery_time.has_value());
    CHECK(dead == (r.cemetery_cause != CemeteryCause::None));
    absorbed += dead;
  }
  CHECK(absorbed > 0);
}

TEST_CASE("ensemble statistics") {
  auto p = params(model(1.0, 2, 2, make_zero_kernel()), 0.1, 0.5, 4);
  auto recs = run(p, InitialSpec::from_configuration(Configuration(2, 2, {0, 0, 1, 0})));
  auto s = ensemble_stats(recs);
  for (double v : s.survival) CHECK(v == 1.0);
  CHECK(s.min_dist_edges.size() == 21);
  CHECK(s.min_dist_histogram.front().size() == 20);

  // kill replica 2 from t = 0.2 on
  auto& r = recs[2];
  r.cemetery_time = 0.2;
  r.cemetery_cause = CemeteryCause::Escape;
  for (std::size_t t = 0; t < r.times.size(); ++t) {
    if (r.times[t] >= 0.2 - 1e-12) r.alive[t] = false;
  }
  s = ensemble_stats(recs);
  for (std::size_t t = 0; t < s.times.size(); ++t) {
    CHECK(s.survival[t] == (s.times[t] >= 0.2 - 1e-12 ? 0.75 : 1.0));
  }

  recs[1].times.back() += 0.01;
  CHECK_THROWS_AS(ensemble_stats(recs), ParameterError);
  CHECK_THROWS_AS(ensemble_stats({}), ParameterError);
}
