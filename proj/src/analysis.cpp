#include "aggdiff/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "aggdiff/errors.hpp"
#include "aggdiff/format.hpp"

namespace aggdiff {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Convergent:
      return "Convergent";
    case Verdict::Divergent:
      return "Divergent";
    case Verdict::Inconclusive:
      return "Inconclusive";
  }
  return "Inconclusive";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ShellResult {
  double value = 0.0;
  double error = 0.0;
  bool overflow = false;
};

ShellResult integrate_shell(const std::function<double(double)>& f, double a, double b,
                            double tol) {
  bool overflow = false;
  auto checked = [&](double r) {
    const double v = f(r);
    if (std::isnan(v)) {
      throw InputError("integrand returned NaN at r = " + format_double(r));
    }
    if (v < 0.0) {
      throw InputError("integrand returned a negative value at r = " + format_double(r));
    }
    if (std::isinf(v)) {
      overflow = true;
      return 0.0;
    }
    return v;
  };
  ShellResult out;
  const double w = b - a;
  auto unit = [&](double t) { return checked(a + w * t); };
  out.value = w * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(unit, 0.0, 1.0, 15,
                                                                                 tol, &out.error);
  out.error *= 0.5 * w;
  out.overflow = overflow || std::isinf(out.value);
  if (out.overflow) out.value = kInf;
  return out;
}

struct LineFit {
  double slope = 0.0;
  double slope_se = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  if (n > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - my - fit.slope * (x[i] - mx);
      ssr += e * e;
    }
    fit.slope_se = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

// exp(log-sum) for integrands assembled from logs; a zero factor gives 0.
double exp_or_zero(double log_value) {
  if (std::isnan(log_value)) return 0.0;
  return std::exp(log_value);
}

double upper_limit(const ModelParams& m, const ClassifierOptions& opts) {
  double delta = opts.delta;
  if (std::isfinite(m.kernel.domain_max())) {
    delta = std::min(delta, m.kernel.domain_max() * std::exp(-1.0));
  }
  return delta;
}

ClassifierOptions with_delta(ClassifierOptions opts, double delta) {
  opts.delta = delta;
  return opts;
}

}  // namespace

IntegrabilityReport classify_improper_integral(const std::function<double(double)>& f,
                                               const ClassifierOptions& opts) {
  if (!(opts.delta > 0.0) || opts.levels < opts.fit_window + 1 || opts.fit_window < 3 ||
      opts.ratio_window < 1 || opts.ratio_window >= opts.fit_window) {
    throw ParameterError("classifier options out of range");
  }
  IntegrabilityReport rep;
  rep.delta = opts.delta;
  const int levels = opts.levels;
  std::vector<double> shells(static_cast<std::size_t>(levels));
  rep.partial_values.assign(static_cast<std::size_t>(levels) + 1, 0.0);
  bool overflow = false;
  bool shell_failure = false;
  for (int j = 0; j < levels; ++j) {
    const double hi = std::ldexp(opts.delta, -j);
    const double lo = std::ldexp(opts.delta, -(j + 1));
    const ShellResult s = integrate_shell(f, lo, hi, opts.shell_tol);
    shells[static_cast<std::size_t>(j)] = s.value;
    overflow = overflow || s.overflow;
    if (!s.overflow && s.error > 1e-6 * std::abs(s.value) + 1e-300) shell_failure = true;
    rep.partial_values[static_cast<std::size_t>(j) + 1] = rep.partial_values[j] + s.value;
  }

  if (overflow) {
    rep.verdict = Verdict::Divergent;
    rep.fitted_exponent = kInf;
    rep.limit_estimate = kInf;
    rep.diagnostic = "integrand overflows near 0";
    return rep;
  }

  // Regression window: the last fit_window shells with a positive integral.
  std::vector<double> xs, ys;
  int zero_tail = 0;
  for (int j = levels - opts.fit_window; j < levels; ++j) {
    const double c = shells[static_cast<std::size_t>(j)];
    if (c > 0.0) {
      xs.push_back(std::log(std::ldexp(opts.delta, -j)));
      ys.push_back(std::log(c));
    } else {
      ++zero_tail;
    }
  }
  const double last_partial = rep.partial_values.back();
  if (shells.back() == 0.0 || xs.size() < 3) {
    rep.verdict = Verdict::Convergent;
    rep.fitted_exponent = -kInf;
    rep.limit_estimate = last_partial;
    rep.diagnostic = zero_tail == opts.fit_window ? "integrand vanishes near 0"
                                                  : "integrand underflows to 0 near 0";
    return rep;
  }

  const LineFit fit = fit_line(xs, ys);
  const double a = 1.0 - fit.slope;
  const double band = 3.0 * fit.slope_se + 1e-9;
  rep.fitted_exponent = a;
  rep.exponent_band = band;

  // Cauchy increments over the last ratio_window levels.
  double max_ratio = 0.0, min_ratio = kInf;
  for (int j = levels - opts.ratio_window - 1; j < levels - 1; ++j) {
    const double c0 = shells[static_cast<std::size_t>(j)];
    const double c1 = shells[static_cast<std::size_t>(j) + 1];
    const double ratio = c0 > 0.0 ? c1 / c0 : kInf;
    max_ratio = std::max(max_ratio, ratio);
    min_ratio = std::min(min_ratio, ratio);
  }
  const bool geometric_decay = max_ratio <= 0.9;
  const bool non_decaying = min_ratio >= 1.0;

  std::ostringstream diag;
  diag << "exponent " << format_double(a) << " +/- " << format_double(band)
       << ", shell ratios in [" << format_double(min_ratio) << ", " << format_double(max_ratio)
       << "]";

  if (shell_failure) {
    rep.verdict = Verdict::Inconclusive;
    diag << "; shell quadrature did not converge";
  } else if (std::abs(a - 1.0) <= opts.margin) {
    rep.verdict = Verdict::Inconclusive;
    diag << "; exponent within margin of 1";
  } else if (a < 1.0) {
    if (a + band < 1.0 && !non_decaying) {
      rep.verdict = Verdict::Convergent;
    } else {
      rep.verdict = Verdict::Inconclusive;
      diag << "; mixed evidence";
    }
  } else {
    if (a - band > 1.0 && !geometric_decay) {
      rep.verdict = Verdict::Divergent;
    } else {
      rep.verdict = Verdict::Inconclusive;
      diag << "; mixed evidence";
    }
  }

  if (rep.verdict == Verdict::Convergent) {
    const double rho = std::exp2(a - 1.0);
    rep.limit_estimate = last_partial + shells.back() * rho / (1.0 - rho);
  } else if (rep.verdict == Verdict::Divergent) {
    rep.limit_estimate = kInf;
  } else {
    rep.limit_estimate = last_partial;
  }
  rep.diagnostic = diag.str();
  return rep;
}

IntegrabilityReport check_Hp(double p, const ModelParams& m, const ClassifierOptions& opts) {
  if (!(p > 1.0)) throw ParameterError("[H]_p requires p > 1");
  m.validate();
  const double c = m.chi / m.N;
  auto f = [&](double t) {
    const double kp = std::abs(m.kernel.deriv1(t));
    if (kp == 0.0) return 0.0;
    return exp_or_zero(p * std::log(kp) - c * m.kernel.eval(t) + (m.d - 1) * std::log(t));
  };
  return classify_improper_integral(f, with_delta(opts, upper_limit(m, opts)));
}

NkResult compute_nk(const ModelParams& m, const ClassifierOptions& opts) {
  m.validate();
  const ClassifierOptions o = with_delta(opts, upper_limit(m, opts));
  NkResult out;
  std::optional<int> pending_hi;
  for (int n = m.N + 1; n >= 2; --n) {
    const double c = n * m.chi / (m.d * static_cast<double>(m.N));
    auto f = [&](double r) { return exp_or_zero(-c * m.kernel.eval(r)); };
    const IntegrabilityReport rep = classify_improper_integral(f, o);
    const Verdict v = rep.verdict;
    out.reports.emplace(n, rep);
    if (v == Verdict::Convergent) {
      if (pending_hi) {
        out.ambiguous_range = std::make_pair(n, *pending_hi);
      } else {
        out.value = n;
      }
      return out;
    }
    if (v == Verdict::Inconclusive && !pending_hi) pending_hi = n;
  }
  if (pending_hi) out.ambiguous_range = std::make_pair(2, *pending_hi);
  return out;
}

RadonResult check_radon(const ModelParams& m, const ClassifierOptions& opts) {
  const NkResult nk = compute_nk(m, opts);
  RadonResult out;
  out.radon_everywhere = !m.kernel.increasing();
  if (!nk.value) {
    out.applicable = false;
    return out;
  }
  const int n = *nk.value;
  out.n_k = n;
  out.on_E_nk = nk.reports.at(n).verdict;
  if (n == m.N + 1) {
    out.radon_everywhere = true;
    return out;
  }
  if (!m.kernel.increasing()) return out;
  const double c = n * (n - 1) * m.chi / m.N;
  const double power = m.d * (n - 2.0);
  auto f = [&](double r) { return exp_or_zero(-c * m.kernel.eval(r) + power * std::log(r)); };
  out.failure_on_E_nk_plus_1 =
      classify_improper_integral(f, with_delta(opts, upper_limit(m, opts)));
  return out;
}

ClosabilityResult check_closability(const ModelParams& m, const ClassifierOptions& opts) {
  m.validate();
  const ClassifierOptions o = with_delta(opts, upper_limit(m, opts));
  ClosabilityResult out;
  bool all_conv = true, any_div = false;
  for (int c : {2, 2 * (m.N - 1)}) {
    if (out.reports.count(c)) continue;
    const double coef = c * m.chi / m.N;
    auto f = [&](double r) {
      return exp_or_zero(coef * m.kernel.eval(r) + (m.d - 1) * std::log(r));
    };
    const IntegrabilityReport rep = classify_improper_integral(f, o);
    all_conv = all_conv && rep.verdict == Verdict::Convergent;
    any_div = any_div || rep.verdict == Verdict::Divergent;
    out.reports.emplace(c, rep);
  }
  out.verdict = all_conv ? Verdict::Convergent
                         : (any_div ? Verdict::Divergent : Verdict::Inconclusive);
  out.review_flag = !all_conv;
  return out;
}

bool finiteness_consistent(Finiteness lhs, Verdict rhs) {
  if (lhs == Finiteness::Undetermined || rhs == Verdict::Inconclusive) return true;
  return (lhs == Finiteness::Finite) == (rhs == Verdict::Convergent);
}

H2Result check_h2(const ModelParams& m, double p, double delta, long long samples,
                  std::uint64_t seed, const ClassifierOptions& opts, unsigned threads) {
  m.validate();
  if (!(p > 1.0)) throw ParameterError("H2 check requires p > 1");
  if (!(delta > 0.0)) throw ParameterError("H2 check requires delta > 0");
  if (m.N * m.d > 12) throw PreconditionError("H2 Monte Carlo needs N*d <= 12");
  H2Result out;
  auto log_integrand = [&](std::span<const double> x) {
    const double bn = drift(x, m).norm();
    const double lw = log_weight(x, m);
    if (bn == 0.0) return -kInf;
    return p * std::log(bn) + lw;
  };
  out.lhs = integrate_over_ball(m.N * m.d, delta, samples, seed, log_integrand, threads);
  out.rhs_report = check_Hp(p, m, opts);
  if (out.rhs_report.verdict == Verdict::Convergent) {
    out.rhs_value = std::pow(out.rhs_report.limit_estimate, p / 2.0);
  } else if (out.rhs_report.verdict == Verdict::Divergent) {
    out.rhs_value = kInf;
  } else {
    out.rhs_value = std::numeric_limits<double>::quiet_NaN();
  }
  out.ratio = (std::isfinite(out.lhs.estimate) && std::isfinite(out.rhs_value) &&
               out.rhs_value > 0.0)
                  ? out.lhs.estimate / out.rhs_value
                  : std::numeric_limits<double>::quiet_NaN();
  out.consistent = finiteness_consistent(out.lhs.finiteness, out.rhs_report.verdict);
  return out;
}

IntegrabilityReport check_schrodinger_condition(const ModelParams& m,
                                                const ClassifierOptions& opts) {
  m.validate();
  const double c = m.chi / m.N;
  auto f = [&](double t) {
    const double kp = m.kernel.deriv1(t);
    const double lap = m.kernel.deriv2(t) + (m.d - 1) * kp / t;
    const double bracket = lap * lap + kp * kp * kp * kp;
    if (bracket == 0.0) return 0.0;
    if (std::isinf(bracket)) return kInf;
    return exp_or_zero(std::log(bracket) - c * m.kernel.eval(t) + (m.d - 1) * std::log(t));
  };
  return classify_improper_integral(f, with_delta(opts, upper_limit(m, opts)));
}

bool ConditionCertificate::any_inconclusive() const {
  auto inc = [](Verdict v) { return v == Verdict::Inconclusive; };
  for (const auto& [_, r] : hp) {
    if (inc(r.verdict)) return true;
  }
  if (n_k.ambiguous_range) return true;
  if (radon.failure_on_E_nk_plus_1 && inc(radon.failure_on_E_nk_plus_1->verdict)) return true;
  if (inc(closability.verdict)) return true;
  if (h2 && inc(h2->rhs_report.verdict)) return true;
  return inc(schrodinger_condition.verdict);
}

ConditionCertificate analyze(const ModelParams& m, const CertificateOptions& opts) {
  m.validate();
  ConditionCertificate cert;
  cert.model = m;
  cert.seed = opts.seed;
  std::vector<double> ps = opts.p_values;
  if (ps.empty()) ps.push_back(m.d * m.N + 1.0);
  for (double p : ps) {
    cert.hp.emplace(p, check_Hp(p, m, opts.classifier));
    if (p > m.d * m.N && cert.hp.at(p).verdict == Verdict::Convergent) {
      cert.hp_hypothesis_satisfied = true;
    }
  }
  cert.n_k = compute_nk(m, opts.classifier);
  cert.radon = check_radon(m, opts.classifier);
  cert.closability = check_closability(m, opts.classifier);
  cert.h2_p = opts.h2_p > 0.0 ? opts.h2_p : ps.front();
  if (m.N * m.d <= 12) {
    cert.h2 = check_h2(m, cert.h2_p, opts.h2_delta, opts.h2_samples, opts.seed, opts.classifier,
                       opts.threads);
  }
  cert.schrodinger_condition = check_schrodinger_condition(m, opts.classifier);
  cert.kato_comment =
      "informational: Kato-class membership is not tested; for radial kernels [H]_p and K_d "
      "differ (e.g. r^-2 (-log r)^-alpha is in [H]_p for all alpha but in K_d, d>=3, only for "
      "alpha>1)";
  return cert;
}

nlohmann::json to_json(const IntegrabilityReport& r) {
  return {{"verdict", to_string(r.verdict)},
          {"partial_values", r.partial_values},
          {"fitted_exponent", r.fitted_exponent},
          {"exponent_band", r.exponent_band},
          {"delta", r.delta},
          {"limit_estimate", r.limit_estimate},
          {"diagnostic", r.diagnostic}};
}

namespace {

nlohmann::json to_json(const BallEstimate& e) {
  return {{"estimate", e.estimate},         {"std_error", e.std_error},
          {"tail_index", e.tail_index},     {"finiteness", to_string(e.finiteness)},
          {"samples", e.samples},           {"rejected", e.rejected},
          {"overflow", e.overflow},         {"unreliable", e.unreliable}};
}

nlohmann::json model_json(const ModelParams& m) {
  return {{"chi", m.chi},
          {"N", m.N},
          {"d", m.d},
          {"kernel", {{"name", m.kernel.name()}, {"params", m.kernel.params()}}},
          {"non_paper_regime", m.non_paper_regime}};
}

}  // namespace

nlohmann::json to_json(const ConditionCertificate& c) {
  nlohmann::json j;
  j["schema_version"] = kCertificateSchemaVersion;
  j["model"] = model_json(c.model);
  const auto lim = c.model.kernel.limit_at_zero();
  j["regime"] = {{"monotonicity", to_string(c.model.kernel.monotonicity())},
                 {"limit_at_zero", to_string(lim.kind)},
                 {"limit_value", lim.kind == LimitAtZero::Kind::Finite
                                     ? nlohmann::json(lim.value)
                                     : nlohmann::json(nullptr)},
                 {"singular_at_zero", lim.singular()},
                 {"state_space", c.model.kernel.increasing() ? "E_{n_k}" : "E_2"}};
  nlohmann::json hp = nlohmann::json::object();
  for (const auto& [p, r] : c.hp) hp[format_double(p)] = to_json(r);
  j["hp"] = hp;
  j["hp_hypothesis_satisfied"] = c.hp_hypothesis_satisfied;
  j["n_k"] = c.n_k.value ? nlohmann::json(*c.n_k.value) : nlohmann::json(nullptr);
  j["n_k_ambiguous_range"] =
      c.n_k.ambiguous_range
          ? nlohmann::json::array({c.n_k.ambiguous_range->first, c.n_k.ambiguous_range->second})
          : nlohmann::json(nullptr);
  nlohmann::json nk_reports = nlohmann::json::object();
  for (const auto& [n, r] : c.n_k.reports) nk_reports[std::to_string(n)] = to_json(r);
  j["n_k_reports"] = nk_reports;
  j["radon_on_E_nk"] =
      c.radon.on_E_nk ? nlohmann::json(to_string(*c.radon.on_E_nk)) : nlohmann::json(nullptr);
  j["radon_failure_on_E_nk_plus_1"] = c.radon.failure_on_E_nk_plus_1
                                          ? to_json(*c.radon.failure_on_E_nk_plus_1)
                                          : nlohmann::json(nullptr);
  j["radon_everywhere"] = c.radon.radon_everywhere;
  nlohmann::json clos_reports = nlohmann::json::object();
  for (const auto& [cc, r] : c.closability.reports) clos_reports[std::to_string(cc)] = to_json(r);
  j["closability_Sm"] = {{"verdict", to_string(c.closability.verdict)},
                         {"label", ClosabilityResult::label},
                         {"review_flag", c.closability.review_flag},
                         {"reports", clos_reports}};
  if (c.h2) {
    j["h2_bound"] = {{"p", c.h2_p},
                     {"lhs", to_json(c.h2->lhs)},
                     {"rhs_report", to_json(c.h2->rhs_report)},
                     {"rhs_value", c.h2->rhs_value},
                     {"ratio", c.h2->ratio},
                     {"consistent", c.h2->consistent},
                     {"caveat", "inequality holds up to an unstated constant; only joint "
                                "finiteness is asserted; uniqueness is not certified"}};
  } else {
    j["h2_bound"] = nullptr;
  }
  j["schrodinger_condition"] = to_json(c.schrodinger_condition);
  j["kato_comment"] = c.kato_comment;
  j["seed"] = c.seed;
  return j;
}

std::string text_report(const ConditionCertificate& c) {
  std::ostringstream os;
  const auto& m = c.model;
  os << "kernel " << m.kernel.name() << " (" << to_string(m.kernel.monotonicity())
     << ", k(0+) " << to_string(m.kernel.limit_at_zero().kind) << "), chi=" << m.chi
     << " N=" << m.N << " d=" << m.d << "\n";
  for (const auto& [p, r] : c.hp) {
    os << "[H]_p p=" << p << ": " << to_string(r.verdict) << " (" << r.diagnostic << ")\n";
  }
  os << "[H]_p hypothesis (some p > dN): " << (c.hp_hypothesis_satisfied ? "satisfied" : "not shown")
     << "\n";
  if (c.n_k.value) {
    os << "n_k = " << *c.n_k.value << "\n";
  } else if (c.n_k.ambiguous_range) {
    os << "n_k ambiguous in [" << c.n_k.ambiguous_range->first << ", "
       << c.n_k.ambiguous_range->second << "]\n";
  } else {
    os << "n_k: none (n = 2 diverges)\n";
  }
  if (c.radon.on_E_nk) os << "Radon on E_{n_k}: " << to_string(*c.radon.on_E_nk) << "\n";
  if (c.radon.failure_on_E_nk_plus_1) {
    os << "non-Radon on E_{n_k+1} integral: " << to_string(c.radon.failure_on_E_nk_plus_1->verdict)
       << "\n";
  }
  if (c.radon.radon_everywhere) os << "Radon on the whole configuration space\n";
  os << "closability surrogate (heuristic): " << to_string(c.closability.verdict)
     << (c.closability.review_flag ? " -- review" : "") << "\n";
  if (c.h2) {
    os << "H2: lhs " << c.h2->lhs.estimate << " (" << to_string(c.h2->lhs.finiteness)
       << "), rhs " << to_string(c.h2->rhs_report.verdict)
       << (c.h2->consistent ? ", consistent" : ", INCONSISTENT") << "\n";
  }
  os << "Schrodinger condition: " << to_string(c.schrodinger_condition.verdict) << " ("
     << c.schrodinger_condition.diagnostic << ")\n";
  os << c.kato_comment << "\n";
  return os.str();
}

}  // namespace aggdiff
