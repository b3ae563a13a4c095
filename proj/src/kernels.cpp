#include "aggdiff/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aggdiff/errors.hpp"

namespace aggdiff {

std::string to_string(Monotonicity m) {
  return m == Monotonicity::Increasing ? "Increasing" : "Decreasing";
}

std::string to_string(LimitAtZero::Kind k) {
  switch (k) {
    case LimitAtZero::Kind::MinusInfinity:
      return "MinusInfinity";
    case LimitAtZero::Kind::PlusInfinity:
      return "PlusInfinity";
    case LimitAtZero::Kind::Finite:
      return "Finite";
  }
  return "Finite";
}

KernelSpec::KernelSpec(std::string name, RadialFn eval, RadialFn deriv1, RadialFn deriv2,
                       Monotonicity monotonicity, LimitAtZero limit,
                       std::map<std::string, double> params, double domain_max)
    : name_(std::move(name)),
      eval_(std::move(eval)),
      deriv1_(std::move(deriv1)),
      deriv2_(std::move(deriv2)),
      monotonicity_(monotonicity),
      limit_(limit),
      params_(std::move(params)),
      domain_max_(domain_max) {}

void KernelSpec::check_domain(double r) const {
  if (!(r > 0.0)) {
    throw DomainError("kernel '" + name_ + "' evaluated at r <= 0");
  }
  if (!(r < domain_max_)) {
    throw DomainError("kernel '" + name_ + "' evaluated outside (0, " +
                      std::to_string(domain_max_) + ")");
  }
}

double KernelSpec::eval(double r) const {
  check_domain(r);
  return eval_(r);
}

double KernelSpec::deriv1(double r) const {
  check_domain(r);
  return deriv1_(r);
}

double KernelSpec::deriv2(double r) const {
  check_domain(r);
  return deriv2_(r);
}

KernelSpec make_log_kernel() {
  return KernelSpec(
      "log", [](double r) { return std::log(r); }, [](double r) { return 1.0 / r; },
      [](double r) { return -1.0 / (r * r); }, Monotonicity::Increasing,
      LimitAtZero::minus_infinity());
}

KernelSpec make_power_kernel(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ParameterError("power kernel requires alpha in (0,1)");
  }
  const double e = 1.0 - alpha;
  return KernelSpec(
      "power", [alpha, e](double r) { return std::pow(r, e) / e; },
      [alpha](double r) { return std::pow(r, -alpha); },
      [alpha](double r) { return -alpha * std::pow(r, -alpha - 1.0); },
      Monotonicity::Increasing, LimitAtZero::finite(0.0), {{"alpha", alpha}});
}

KernelSpec make_inverse_power_kernel(double beta) {
  if (!(beta > 0.0)) {
    throw ParameterError("inverse-power kernel requires beta > 0");
  }
  return KernelSpec(
      "inverse_power", [beta](double r) { return std::pow(r, -beta); },
      [beta](double r) { return -beta * std::pow(r, -beta - 1.0); },
      [beta](double r) { return beta * (beta + 1.0) * std::pow(r, -beta - 2.0); },
      Monotonicity::Decreasing, LimitAtZero::plus_infinity(), {{"beta", beta}});
}

KernelSpec make_log_power_kernel(double alpha) {
  // With L = -log r:
  //   k   = r^-2 L^-a
  //   k'  = r^-3 L^-a (-2 + a/L)
  //   k'' = r^-4 L^-a (6 - 5a/L + a(a+1)/L^2)
  auto eval = [alpha](double r) {
    const double L = -std::log(r);
    return std::pow(r, -2.0) * std::pow(L, -alpha);
  };
  auto d1 = [alpha](double r) {
    const double L = -std::log(r);
    return std::pow(r, -3.0) * std::pow(L, -alpha) * (-2.0 + alpha / L);
  };
  auto d2 = [alpha](double r) {
    const double L = -std::log(r);
    return std::pow(r, -4.0) * std::pow(L, -alpha) *
           (6.0 - 5.0 * alpha / L + alpha * (alpha + 1.0) / (L * L));
  };
  return KernelSpec("log_power", eval, d1, d2, Monotonicity::Decreasing,
                    LimitAtZero::plus_infinity(), {{"alpha", alpha}}, 1.0);
}

namespace {

// Quintic Hermite interpolant of g(s) on nodes s_i with g, g', g'' given.
class LogHermiteTable {
 public:
  explicit LogHermiteTable(const std::vector<KernelSample>& samples) {
    s_.reserve(samples.size());
    for (const auto& row : samples) {
      s_.push_back(std::log(row.r));
      g_.push_back(row.k);
      gs_.push_back(row.r * row.kp);
      gss_.push_back(row.r * row.r * row.kpp + row.r * row.kp);
    }
  }

  // Returns {g, dg/ds, d2g/ds2} at s.
  std::array<double, 3> at(double s) const {
    const std::size_t n = s_.size();
    if (s <= s_.front()) {
      return linear(0, s);
    }
    if (s >= s_.back()) {
      return linear(n - 1, s);
    }
    const auto it = std::upper_bound(s_.begin(), s_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - s_.begin()) - 1;
    const double h = s_[i + 1] - s_[i];
    const double t = (s - s_[i]) / h;
    const double dg = g_[i + 1] - g_[i];
    const double a1 = h * gs_[i], b1 = h * gs_[i + 1];
    const double a2 = h * h * gss_[i], b2 = h * h * gss_[i + 1];
    const double c0 = g_[i];
    const double c1 = a1;
    const double c2 = 0.5 * a2;
    const double c3 = 10.0 * dg - 6.0 * a1 - 4.0 * b1 - 1.5 * a2 + 0.5 * b2;
    const double c4 = -15.0 * dg + 8.0 * a1 + 7.0 * b1 + 1.5 * a2 - b2;
    const double c5 = 6.0 * dg - 3.0 * a1 - 3.0 * b1 - 0.5 * a2 + 0.5 * b2;
    const double v = c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))));
    const double dv = c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)));
    const double ddv = 2.0 * c2 + t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
    return {v, dv / h, ddv / (h * h)};
  }

  double slope_at_start() const { return gs_.front(); }
  double value_at_start() const { return g_.front(); }

 private:
  std::array<double, 3> linear(std::size_t i, double s) const {
    if (s == s_[i]) return {g_[i], gs_[i], gss_[i]};
    return {g_[i] + gs_[i] * (s - s_[i]), gs_[i], 0.0};
  }

  std::vector<double> s_, g_, gs_, gss_;
};

}  // namespace

KernelSpec make_tabulated_kernel(std::string name, std::vector<KernelSample> samples) {
  if (samples.size() < 2) {
    throw InputError("tabulated kernel needs at least two rows");
  }
  bool any_pos = false, any_neg = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& row = samples[i];
    if (!(row.r > 0.0) || !std::isfinite(row.r) || !std::isfinite(row.k) ||
        !std::isfinite(row.kp) || !std::isfinite(row.kpp)) {
      throw InputError("tabulated kernel row " + std::to_string(i) +
                       " has non-finite values or r <= 0");
    }
    if (i > 0 && !(row.r > samples[i - 1].r)) {
      throw InputError("tabulated kernel radii must be strictly increasing");
    }
    any_pos = any_pos || row.kp > 0.0;
    any_neg = any_neg || row.kp < 0.0;
  }
  if (any_pos && any_neg) {
    throw InputError("tabulated kernel '" + name + "' is not monotone (k' changes sign)");
  }
  const Monotonicity mono = any_neg ? Monotonicity::Decreasing : Monotonicity::Increasing;

  auto table = std::make_shared<const LogHermiteTable>(samples);
  LimitAtZero limit = LimitAtZero::finite(table->value_at_start());
  if (table->slope_at_start() > 0.0) {
    limit = LimitAtZero::minus_infinity();
  } else if (table->slope_at_start() < 0.0) {
    limit = LimitAtZero::plus_infinity();
  }

  auto eval = [table](double r) { return table->at(std::log(r))[0]; };
  auto d1 = [table](double r) { return table->at(std::log(r))[1] / r; };
  auto d2 = [table](double r) {
    const auto g = table->at(std::log(r));
    return (g[2] - g[1]) / (r * r);
  };
  return KernelSpec(std::move(name), eval, d1, d2, mono, limit);
}

KernelSpec make_zero_kernel() {
  return make_tabulated_kernel("zero", {{1e-8, 0.0, 0.0, 0.0}, {1e2, 0.0, 0.0, 0.0}});
}

std::vector<KernelSample> read_kernel_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open kernel table " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw InputError("kernel table " + path.string() + " is empty");
  }
  // The header is required; it must not parse as numbers.
  {
    std::istringstream hs(line);
    double probe;
    if (hs >> probe) {
      throw InputError("kernel table " + path.string() + " lacks a header row");
    }
  }
  std::vector<KernelSample> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    KernelSample s{};
    if (!(ls >> s.r >> s.k >> s.kp >> s.kpp)) {
      throw InputError("kernel table line " + std::to_string(lineno) + ": expected 4 numbers");
    }
    std::string extra;
    if (ls >> extra) {
      throw InputError("kernel table line " + std::to_string(lineno) + ": too many columns");
    }
    rows.push_back(s);
  }
  return rows;
}

namespace {
double require_param(const std::map<std::string, double>& params, const std::string& kernel,
                     const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) {
    throw ParameterError("kernel '" + kernel + "' requires parameter '" + key + "'");
  }
  return it->second;
}
}  // namespace

KernelSpec make_kernel(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "log") return make_log_kernel();
  if (name == "zero") return make_zero_kernel();
  if (name == "power") return make_power_kernel(require_param(params, name, "alpha"));
  if (name == "inverse_power") {
    return make_inverse_power_kernel(require_param(params, name, "beta"));
  }
  if (name == "log_power") return make_log_power_kernel(require_param(params, name, "alpha"));
  throw ParameterError("unknown kernel '" + name + "'");
}

}  // namespace aggdiff
