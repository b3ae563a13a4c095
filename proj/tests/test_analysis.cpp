#include <doctest.h>

#include <cmath>

#include "aggdiff/analysis.hpp"
#include "aggdiff/errors.hpp"

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

// \int_0 r^e dr converges iff e > -1.
Verdict power_law_verdict(double e) { return e > -1.0 ? Verdict::Convergent : Verdict::Divergent; }

}  // namespace

TEST_CASE("classifier on pure power laws") {
  for (double a : {0.3, 0.5, 0.9}) {
    CAPTURE(a);
    CHECK(classify_improper_integral([a](double r) { return std::pow(r, -a); }).verdict ==
          Verdict::Convergent);
  }
  for (double a : {1.1, 1.5, 2.0}) {
    CAPTURE(a);
    CHECK(classify_improper_integral([a](double r) { return std::pow(r, -a); }).verdict ==
          Verdict::Divergent);
  }
  const auto half = classify_improper_integral([](double r) { return 1.0 / std::sqrt(r); });
  CHECK(half.limit_estimate == Approx(2.0).epsilon(5e-4));
  CHECK(half.fitted_exponent == Approx(0.5).epsilon(1e-3));
  const auto one = classify_improper_integral([](double r) { return 1.0 / r; });
  CHECK(one.verdict != Verdict::Convergent);
}

TEST_CASE("classifier never gives a wrong definite verdict near exponent one") {
  for (double a : {0.96, 0.98, 0.99, 1.0, 1.01, 1.02, 1.04}) {
    CAPTURE(a);
    const auto v = classify_improper_integral([a](double r) { return std::pow(r, -a); }).verdict;
    if (a < 1.0) CHECK(v != Verdict::Divergent);
    if (a > 1.0) CHECK(v != Verdict::Convergent);
  }
}

TEST_CASE("classifier partial values are nondecreasing") {
  const auto rep = classify_improper_integral([](double r) { return std::pow(r, -0.7) + 1.0; });
  for (std::size_t j = 1; j < rep.partial_values.size(); ++j) {
    CHECK(rep.partial_values[j] >= rep.partial_values[j - 1]);
  }
  CHECK(rep.partial_values.size() == 41);
}

TEST_CASE("log-corrected power law near the critical exponent") {
  // r^-2 (-log r)^-2 is not integrable at 0: the classifier must not call it Convergent
  ClassifierOptions o;
  o.delta = std::exp(-1.0);
  const auto rep = classify_improper_integral(
      [](double r) { return std::pow(r, -2.0) * std::pow(-std::log(r), -2.0); }, o);
  CHECK(rep.verdict != Verdict::Convergent);
  // r^-1 (-log r)^-2 is integrable but slowly: Convergent or Inconclusive
  const auto slow = classify_improper_integral(
      [](double r) { return std::pow(r, -1.0) * std::pow(-std::log(r), -2.0); }, o);
  CHECK(slow.verdict != Verdict::Divergent);
}

TEST_CASE("classifier input errors") {
  CHECK_THROWS_AS(classify_improper_integral([](double) { return NAN; }), InputError);
  CHECK_THROWS_AS(classify_improper_integral([](double) { return -1.0; }), InputError);
  CHECK(classify_improper_integral([](double) { return 0.0; }).verdict == Verdict::Convergent);
}

TEST_CASE("[H]_p examples") {
  // log kernel: |k'|^p e^{-(chi/N) log t} t^{d-1} = t^{-p - chi/N + d - 1}
  CHECK(check_Hp(3.0, model(2.0, 2, 2, make_log_kernel())).verdict == power_law_verdict(-3 - 1 + 1));
  CHECK(check_Hp(1.5, model(0.2, 10, 3, make_log_kernel())).verdict ==
        power_law_verdict(-1.5 - 0.02 + 2));
  CHECK(check_Hp(4.0, model(1.0, 2, 3, make_power_kernel(0.5))).verdict == Verdict::Convergent);
  CHECK(check_Hp(7.0, model(1.0, 2, 3, make_power_kernel(0.5))).verdict ==
        power_law_verdict(-3.5 + 2));
  CHECK(check_Hp(50.0, model(1.0, 3, 2, make_zero_kernel())).verdict == Verdict::Convergent);
}

TEST_CASE("n_k examples") {
  const auto boundary = compute_nk(model(4.0, 10, 2, make_log_kernel()));
  // 2N/chi = 5 exactly: the n = 5 integral is \int r^-1, reported as the range [4, 5]
  CHECK_FALSE(boundary.value.has_value());
  REQUIRE(boundary.ambiguous_range.has_value());
  CHECK(boundary.ambiguous_range->first == 4);
  CHECK(boundary.ambiguous_range->second == 5);

  CHECK(compute_nk(model(3.6, 10, 2, make_log_kernel())).value == 5);
  CHECK(compute_nk(model(1.0, 10, 2, make_log_kernel())).value == 11);
  for (double a : {0.2, 0.5, 0.8}) {
    CHECK(compute_nk(model(1.0, 4, 3, make_power_kernel(a))).value == 5);
  }
  CHECK(compute_nk(model(3.0, 3, 2, make_zero_kernel())).value == 4);
  CHECK_FALSE(compute_nk(model(9.1, 4, 2, make_log_kernel())).value.has_value());
}

TEST_CASE("n_k verdicts are a convergent prefix then a divergent suffix") {
  for (double chi : {0.7, 1.3, 2.6, 3.7}) {
    const auto nk = compute_nk(model(chi, 8, 2, make_log_kernel()));
    bool seen_convergent = false;
    for (auto it = nk.reports.rbegin(); it != nk.reports.rend(); ++it) {
      if (it->second.verdict == Verdict::Convergent) seen_convergent = true;
      if (seen_convergent) CHECK(it->second.verdict == Verdict::Convergent);
    }
    for (const auto& [n, rep] : nk.reports) {
      const double a = n * chi / (2.0 * 8);
      if (std::abs(a - 1.0) > 0.02) CHECK(rep.verdict == power_law_verdict(-a));
    }
  }
}

TEST_CASE("Radon checks") {
  // n_k = 5 at N = 10, chi = 4 by the floor formula: failure integrand r^-8 r^6
  const auto failure = classify_improper_integral([](double r) { return std::pow(r, -8.0) * std::pow(r, 6.0); });
  CHECK(failure.verdict == Verdict::Divergent);

  const auto r = check_radon(model(3.6, 10, 2, make_log_kernel()));
  REQUIRE(r.n_k == 5);
  CHECK(r.on_E_nk == Verdict::Convergent);
  REQUIRE(r.failure_on_E_nk_plus_1.has_value());
  // exponent -5*4*3.6/10 + 2*3 = -1.2
  CHECK(r.failure_on_E_nk_plus_1->verdict == Verdict::Divergent);
  CHECK_FALSE(r.radon_everywhere);

  const auto p = check_radon(model(1.0, 4, 3, make_power_kernel(0.5)));
  CHECK(p.n_k == 5);
  CHECK_FALSE(p.failure_on_E_nk_plus_1.has_value());
  CHECK(p.radon_everywhere);

  CHECK(check_radon(model(1.0, 3, 2, make_zero_kernel())).radon_everywhere);
  CHECK(check_radon(model(1.0, 3, 2, make_inverse_power_kernel(1.0))).radon_everywhere);
  CHECK_FALSE(check_radon(model(9.1, 4, 2, make_log_kernel())).applicable);
}

TEST_CASE("closability surrogate") {
  const auto lg = check_closability(model(1.0, 10, 2, make_log_kernel()));
  CHECK(lg.verdict == Verdict::Convergent);
  CHECK_FALSE(lg.review_flag);
  CHECK(lg.reports.count(2) == 1);
  CHECK(lg.reports.count(18) == 1);
  const auto inv = check_closability(model(1.0, 3, 2, make_inverse_power_kernel(1.0)));
  CHECK(inv.verdict == Verdict::Divergent);
  CHECK(inv.review_flag);
  CHECK(check_closability(model(1.0, 3, 2, make_zero_kernel())).verdict == Verdict::Convergent);
  CHECK(std::string(ClosabilityResult::label) == "heuristic");
}

TEST_CASE("Schrodinger condition follows exponent arithmetic") {
  CHECK(check_schrodinger_condition(model(1.0, 2, 2, make_log_kernel())).verdict ==
        Verdict::Divergent);
  CHECK(check_schrodinger_condition(model(2.0, 2, 7, make_log_kernel())).verdict ==
        Verdict::Convergent);
  // log kernel: t^{d - 5 - chi/N}; converges iff d > 4 + chi/N
  for (int d = 2; d <= 8; ++d) {
    const double e = d - 5 - 0.5;
    CHECK(check_schrodinger_condition(model(1.0, 2, d, make_log_kernel())).verdict ==
          power_law_verdict(e));
  }
  // power kernel: (d-1-alpha)^2 t^{-2alpha-2} t^{d-1} dominates; converges iff d > 2 + 2 alpha
  for (double a : {0.2, 0.8}) {
    for (int d = 2; d <= 5; ++d) {
      CAPTURE(a);
      CAPTURE(d);
      CHECK(check_schrodinger_condition(model(1.0, 2, d, make_power_kernel(a))).verdict ==
            power_law_verdict(-2 * a - 2 + d - 1));
    }
  }
  CHECK(check_schrodinger_condition(model(1.0, 2, 3, make_power_kernel(0.5))).verdict !=
        Verdict::Convergent);
}

TEST_CASE("H2 comparison") {
  const auto z = check_h2(model(1.0, 2, 2, make_zero_kernel()), 3.0, 1.0, 4000, 1);
  CHECK(z.lhs.estimate == 0.0);
  CHECK(z.rhs_report.verdict == Verdict::Convergent);
  CHECK(z.consistent);

  const auto lg = check_h2(model(0.5, 2, 2, make_log_kernel()), 3.0, 1.0, 20000, 2);
  CHECK(lg.rhs_report.verdict == Verdict::Divergent);
  CHECK(lg.lhs.finiteness != Finiteness::Finite);
  CHECK(lg.consistent);

  const auto pw = check_h2(model(1.0, 2, 3, make_power_kernel(0.5)), 4.0, 1.0, 20000, 3);
  CHECK(pw.rhs_report.verdict == Verdict::Convergent);
  CHECK(pw.lhs.finiteness != Finiteness::Infinite);
  CHECK(pw.consistent);
  CHECK(std::isfinite(pw.ratio));

  CHECK_THROWS_AS(check_h2(model(1.0, 5, 3, make_log_kernel()), 3.0, 1.0, 100, 1),
                  PreconditionError);
  CHECK_THROWS_AS(check_h2(model(1.0, 2, 2, make_log_kernel()), 1.0, 1.0, 100, 1),
                  ParameterError);
}

TEST_CASE("certificate assembly") {
  CertificateOptions o;
  o.h2_samples = 4000;
  o.seed = 9;
  const auto cert = analyze(model(3.6, 4, 2, make_log_kernel()), o);
  CHECK(cert.n_k.value == 2);
  CHECK(cert.hp.size() == 1);
  CHECK(cert.hp.count(9.0) == 1);
  CHECK(cert.h2.has_value());
  const auto j = to_json(cert);
  for (const char* key : {"schema_version", "hp", "hp_hypothesis_satisfied", "n_k", "radon_on_E_nk",
                          "radon_failure_on_E_nk_plus_1", "closability_Sm", "h2_bound",
                          "schrodinger_condition", "kato_comment", "seed"}) {
    CAPTURE(key);
    CHECK(j.contains(key));
  }
  CHECK(j.at("closability_Sm").dump().find("heuristic") != std::string::npos);
  CHECK(to_json(analyze(model(3.6, 4, 2, make_log_kernel()), o)).dump() == j.dump());
  CHECK_FALSE(text_report(cert).empty());

  const auto zero = analyze(model(1.0, 2, 2, make_zero_kernel()), o);
  CHECK(zero.hp_hypothesis_satisfied);
  CHECK(zero.n_k.value == 3);

  const auto big = analyze(model(1.0, 5, 3, make_power_kernel(0.5)), o);
  CHECK_FALSE(big.h2.has_value());
  CHECK(to_json(big).at("h2_bound").is_null());
}
