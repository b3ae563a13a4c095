#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace aggdiff {

enum class Finiteness { Finite, Infinite, Undetermined };
std::string to_string(Finiteness f);

/// Uniform-sample Monte Carlo estimate of an integral over a ball.
struct BallEstimate {
  double estimate = 0.0;   // volume * mean
  double std_error = 0.0;
  double tail_index = 0.0; // Hill estimate of the integrand's sampled tail
  Finiteness finiteness = Finiteness::Finite;
  long long samples = 0;
  long long rejected = 0;  // singular samples
  bool overflow = false;   // some sample exceeded double range
  bool unreliable = false; // rejection rate > 50%
};

/// Estimates \int_{B(0,radius)} exp(log_integrand(x)) dx in R^dim.
///
/// log_integrand may return -inf for zero and may throw SingularConfiguration,
/// in which case the sample is rejected and counted. Samples are drawn in
/// fixed-size chunks with per-chunk streams so the result is identical for
/// every thread count.
BallEstimate integrate_over_ball(int dim, double radius, long long samples, std::uint64_t seed,
                                 const std::function<double(std::span<const double>)>& log_integrand,
                                 unsigned threads = 1);

/// Hill estimator of the tail index from log-values (top k order statistics).
double hill_tail_index(std::span<const double> log_values);

/// Tail index > 1.2 => finite mean; < 0.8 => infinite; otherwise undetermined.
Finiteness finiteness_from_tail(double tail_index);

}  // namespace aggdiff
