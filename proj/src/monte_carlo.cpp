#include "aggdiff/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "aggdiff/errors.hpp"
#include "aggdiff/parallel.hpp"
#include "aggdiff/rng.hpp"

namespace aggdiff {

std::string to_string(Finiteness f) {
  switch (f) {
    case Finiteness::Finite:
      return "Finite";
    case Finiteness::Infinite:
      return "Infinite";
    case Finiteness::Undetermined:
      return "Undetermined";
  }
  return "Undetermined";
}

namespace {
constexpr long long kChunk = 1024;
constexpr double kNoSample = std::numeric_limits<double>::quiet_NaN();

double ball_volume(int dim, double radius) {
  const double half = 0.5 * dim;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0) +
                  dim * std::log(radius));
}
}  // namespace

double hill_tail_index(std::span<const double> log_values) {
  std::vector<double> v;
  v.reserve(log_values.size());
  for (double x : log_values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  const std::size_t n = v.size();
  const std::size_t k = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(double(n))));
  if (n <= k) return std::numeric_limits<double>::infinity();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(),
                   std::greater<>());
  const double threshold = v[k];
  double xi = 0.0;
  for (std::size_t i = 0; i < k; ++i) xi += v[i] - threshold;
  xi /= static_cast<double>(k);
  if (!(xi > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / xi;
}

Finiteness finiteness_from_tail(double tail_index) {
  if (tail_index > 1.2) return Finiteness::Finite;
  if (tail_index < 0.8) return Finiteness::Infinite;
  return Finiteness::Undetermined;
}

BallEstimate integrate_over_ball(int dim, double radius, long long samples, std::uint64_t seed,
                                 const std::function<double(std::span<const double>)>& log_integrand,
                                 unsigned threads) {
  if (dim < 1 || !(radius > 0.0) || samples < 1) {
    throw ParameterError("ball Monte Carlo needs dim >= 1, radius > 0, samples >= 1");
  }
  std::vector<double> logs(static_cast<std::size_t>(samples), kNoSample);
  const std::size_t chunks = static_cast<std::size_t>((samples + kChunk - 1) / kChunk);

  parallel_for(chunks, threads, [&](std::size_t c) {
    Engine eng = make_stream(seed, c);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(dim));
    const long long begin = static_cast<long long>(c) * kChunk;
    const long long end = std::min(samples, begin + kChunk);
    for (long long s = begin; s < end; ++s) {
      double norm2 = 0.0;
      for (double& xi : x) {
        xi = gauss(eng);
        norm2 += xi * xi;
      }
      const double rad = radius * std::pow(unif(eng), 1.0 / dim) / std::sqrt(norm2);
      for (double& xi : x) xi *= rad;
      try {
        logs[static_cast<std::size_t>(s)] = log_integrand(std::span<const double>(x));
      } catch (const SingularConfiguration&) {
        // stays NaN: rejected
      }
    }
  });

  BallEstimate out;
  out.samples = samples;
  double sum = 0.0, sum2 = 0.0;
  long long accepted = 0;
  for (double lv : logs) {
    if (std::isnan(lv)) {
      ++out.rejected;
      continue;
    }
    ++accepted;
    if (lv > 700.0) {
      out.overflow = true;
      continue;
    }
    const double y = std::exp(lv);
    sum += y;
    sum2 += y * y;
  }
  out.unreliable = out.rejected * 2 > samples;
  const double vol = ball_volume(dim, radius);
  if (accepted == 0) {
    out.estimate = std::numeric_limits<double>::quiet_NaN();
    out.finiteness = Finiteness::Undetermined;
    return out;
  }
  const double mean = sum / accepted;
  const double var = std::max(0.0, sum2 / accepted - mean * mean);
  out.estimate = out.overflow ? std::numeric_limits<double>::infinity() : vol * mean;
  out.std_error = vol * std::sqrt(var / accepted);
  out.tail_index = hill_tail_index(logs);
  out.finiteness = out.overflow ? Finiteness::Infinite : finiteness_from_tail(out.tail_index);
  if (sum == 0.0 && !out.overflow) out.finiteness = Finiteness::Finite;
  return out;
}

}  // namespace aggdiff
