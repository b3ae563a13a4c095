#include "aggdiff/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aggdiff/analysis.hpp"
#include "aggdiff/errors.hpp"
#include "aggdiff/format.hpp"
#include "aggdiff/parallel.hpp"

namespace aggdiff {

std::string to_string(Scheme s) {
  return s == Scheme::EulerMaruyama ? "EulerMaruyama" : "TamedEuler";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "EulerMaruyama") return Scheme::EulerMaruyama;
  if (s == "TamedEuler") return Scheme::TamedEuler;
  throw ParameterError("unknown scheme '" + s + "' (expected EulerMaruyama or TamedEuler)");
}

std::string to_string(CemeteryCause c) {
  switch (c) {
    case CemeteryCause::None:
      return "None";
    case CemeteryCause::Collision:
      return "Collision";
    case CemeteryCause::Escape:
      return "Escape";
  }
  return "None";
}

void SimulationParams::validate() const {
  model.validate();
  if (!(dt > 0.0)) throw ParameterError("dt must be > 0");
  if (!(t_end > 0.0)) throw ParameterError("t_end must be > 0");
  if (dt > t_end) throw ParameterError("dt must not exceed t_end");
  if (replicas < 1) throw ParameterError("replicas must be >= 1");
  if (record_stride < 1) throw ParameterError("record_stride must be >= 1");
  if (!(absorb_min_dist >= 0.0)) throw ParameterError("absorb_min_dist must be >= 0");
  if (!(absorb_radius > absorb_min_dist)) {
    throw ParameterError("absorb_radius must exceed absorb_min_dist");
  }
}

long long SimulationParams::steps() const {
  return std::max(1LL, std::llround(t_end / dt));
}

namespace {
double true_min_distance(const Configuration& c) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.particles(); ++i) {
    for (int j = i + 1; j < c.particles(); ++j) best = std::min(best, pair_distance(c, i, j));
  }
  return best;
}
}  // namespace

std::variant<Configuration, Absorbed> step(const Configuration& state, const SimulationParams& p,
                                           std::span<const double> noise, StepInfo* info) {
  if (true_min_distance(state) < p.absorb_min_dist) {
    return Absorbed{CemeteryCause::Collision, state};
  }
  DriftVector b;
  try {
    b = drift(state, p.model);
  } catch (const SingularConfiguration&) {
    return Absorbed{CemeteryCause::Collision, state};
  }
  double factor = p.dt;
  if (p.tamed()) factor = p.dt / (1.0 + p.dt * b.norm());
  const double noise_scale = std::sqrt(2.0 * p.dt);

  Configuration next = state;
  auto x = next.coords();
  for (std::size_t a = 0; a < x.size(); ++a) {
    x[a] += factor * b.components[a] + noise_scale * noise[a];
  }
  if (info) {
    double worst = 0.0;
    for (int i = 0; i < state.particles(); ++i) {
      double s = 0.0;
      for (int l = 0; l < state.dim(); ++l) {
        const double dx = next.at(i, l) - state.at(i, l);
        s += dx * dx;
      }
      worst = std::max(worst, std::sqrt(s));
    }
    info->max_displacement = worst;
  }
  if (true_min_distance(next) < p.absorb_min_dist) {
    return Absorbed{CemeteryCause::Collision, std::move(next)};
  }
  if (next.norm() > p.absorb_radius) {
    return Absorbed{CemeteryCause::Escape, std::move(next)};
  }
  return next;
}

InitialSpec InitialSpec::from_sampler(const std::string& spec) {
  const std::string prefix = "gaussian_iid:";
  if (spec.rfind(prefix, 0) != 0) {
    throw ParameterError("unknown initial sampler '" + spec + "' (expected gaussian_iid:<sigma>)");
  }
  double sigma;
  try {
    sigma = std::stod(spec.substr(prefix.size()));
  } catch (const std::exception&) {
    throw ParameterError("bad sigma in sampler spec '" + spec + "'");
  }
  if (!(sigma > 0.0)) throw ParameterError("sampler sigma must be > 0");
  return {std::nullopt, sigma};
}

std::string InitialSpec::describe() const {
  if (fixed) return "fixed";
  return "gaussian_iid:" + format_double(gaussian_sigma);
}

int state_space_q(const ModelParams& m) {
  if (!m.kernel.increasing()) return 2;
  const NkResult nk = compute_nk(m);
  if (nk.value) return *nk.value;
  if (nk.ambiguous_range) return nk.ambiguous_range->first;
  return 2;
}

void check_admissible(const Configuration& c, const ModelParams& m, int q) {
  if (c.particles() != m.N || c.dim() != m.d) {
    throw ParameterError("initial configuration shape does not match the model");
  }
  if (!in_Eq(c, q)) {
    const int mult = cluster_report(c, 0.0).max_multiplicity;
    throw InadmissibleState("initial state is not in E_" + std::to_string(q) + ": " +
                                std::to_string(mult) + " particles coincide (state space for " +
                                (m.kernel.increasing() ? "an increasing" : "a decreasing") +
                                " kernel is E_" + std::to_string(q) + ")",
                            q);
  }
}

Engine replica_engine(std::uint64_t master_seed, int replica) {
  return make_stream(master_seed, static_cast<std::uint64_t>(replica));
}

Configuration initial_state(const InitialSpec& init, const ModelParams& m, Engine& eng) {
  if (init.fixed) return *init.fixed;
  std::normal_distribution<double> gauss(0.0, init.gaussian_sigma);
  std::vector<double> x(static_cast<std::size_t>(m.N) * m.d);
  for (double& v : x) v = gauss(eng);
  return Configuration(m.N, m.d, std::move(x), m.non_paper_regime);
}

namespace {

TrajectoryRecord run_replica(const SimulationParams& p, const InitialSpec& init, int q,
                             int replica) {
  Engine eng = replica_engine(p.master_seed, replica);
  Configuration x = initial_state(init, p.model, eng);
  if (!init.fixed) check_admissible(x, p.model, q);

  TrajectoryRecord rec;
  rec.replica_id = replica;
  const long long n = p.steps();
  bool alive = true;
  auto record = [&](double t) {
    rec.times.push_back(t);
    rec.states.push_back(x);
    rec.min_pair_distance.push_back(true_min_distance(x));
    rec.alive.push_back(alive);
  };
  if (true_min_distance(x) < p.absorb_min_dist) {
    alive = false;
    rec.cemetery_time = 0.0;
    rec.cemetery_cause = CemeteryCause::Collision;
  }
  record(0.0);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(x.coords().size());
  for (long long s = 1; s <= n; ++s) {
    if (alive) {
      for (double& z : noise) z = gauss(eng);
      StepInfo info;
      auto result = step(x, p, noise, &info);
      rec.max_step_displacement = std::max(rec.max_step_displacement, info.max_displacement);
      if (auto* absorbed = std::get_if<Absorbed>(&result)) {
        alive = false;
        rec.cemetery_time = static_cast<double>(s) * p.dt;
        rec.cemetery_cause = absorbed->cause;
        x = std::move(absorbed->state);
      } else {
        x = std::move(std::get<Configuration>(result));
      }
    }
    if (s % p.record_stride == 0 || s == n) record(static_cast<double>(s) * p.dt);
  }
  return rec;
}

}  // namespace

std::vector<TrajectoryRecord> run(const SimulationParams& p, const InitialSpec& init,
                                  unsigned threads) {
  p.validate();
  const int q = state_space_q(p.model);
  if (init.fixed) check_admissible(*init.fixed, p.model, q);
  std::vector<TrajectoryRecord> out(static_cast<std::size_t>(p.replicas));
  parallel_for(out.size(), threads, [&](std::size_t r) {
    out[r] = run_replica(p, init, q, static_cast<int>(r));
  });
  return out;
}

EnsembleSummary ensemble_stats(const std::vector<TrajectoryRecord>& records, int bins) {
  if (records.empty()) throw ParameterError("ensemble_stats needs at least one record");
  if (bins < 1) throw ParameterError("histogram needs at least one bin");
  const auto& times = records.front().times;
  for (const auto& r : records) {
    if (r.times != times) throw ParameterError("trajectory records have mismatched time grids");
  }
  EnsembleSummary s;
  s.times = times;
  const int n = records.front().states.front().particles();
  const int d = records.front().states.front().dim();
  const std::size_t dof = static_cast<std::size_t>(n) * d;

  double max_dist = 0.0;
  for (const auto& r : records) {
    for (std::size_t t = 0; t < times.size(); ++t) {
      if (r.alive[t] && std::isfinite(r.min_pair_distance[t])) {
        max_dist = std::max(max_dist, r.min_pair_distance[t]);
      }
    }
  }
  if (max_dist == 0.0) max_dist = 1.0;
  for (int b = 0; b <= bins; ++b) s.min_dist_edges.push_back(max_dist * b / bins);

  for (std::size_t t = 0; t < times.size(); ++t) {
    std::vector<double> sum(dof, 0.0), sum2(dof, 0.0), com(d, 0.0), com2(d, 0.0);
    std::vector<int> hist(static_cast<std::size_t>(bins), 0);
    long long alive = 0;
    for (const auto& r : records) {
      if (!r.alive[t]) continue;
      ++alive;
      const auto x = r.states[t].coords();
      for (std::size_t a = 0; a < dof; ++a) {
        sum[a] += x[a];
        sum2[a] += x[a] * x[a];
      }
      for (int l = 0; l < d; ++l) {
        double c = 0.0;
        for (int i = 0; i < n; ++i) c += x[static_cast<std::size_t>(i) * d + l];
        c /= n;
        com[l] += c;
        com2[l] += c * c;
      }
      const double md = r.min_pair_distance[t];
      int bin = static_cast<int>(md / max_dist * bins);
      hist[static_cast<std::size_t>(std::clamp(bin, 0, bins - 1))] += 1;
    }
    s.survival.push_back(static_cast<double>(alive) / static_cast<double>(records.size()));
    auto finish = [alive](std::vector<double>& m1, std::vector<double>& m2) {
      for (std::size_t a = 0; a < m1.size(); ++a) {
        if (alive == 0) {
          m1[a] = std::numeric_limits<double>::quiet_NaN();
          m2[a] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        const double mean = m1[a] / alive;
        const double var =
            alive > 1 ? std::max(0.0, (m2[a] - alive * mean * mean) / (alive - 1)) : 0.0;
        m1[a] = mean;
        m2[a] = var;
      }
    };
    finish(sum, sum2);
    finish(com, com2);
    s.coord_mean.push_back(std::move(sum));
    s.coord_variance.push_back(std::move(sum2));
    s.center_of_mass.push_back(std::move(com));
    s.com_variance.push_back(std::move(com2));
    s.min_dist_histogram.push_back(std::move(hist));
  }
  return s;
}

std::string trajectories_csv(const std::vector<TrajectoryRecord>& records) {
  std::string out = "t,replica,particle";
  const int d = records.empty() ? 0 : records.front().states.front().dim();
  for (int l = 0; l < d; ++l) out += ",coord_" + std::to_string(l);
  out += ",min_dist,alive\n";
  for (const auto& r : records) {
    for (std::size_t t = 0; t < r.times.size(); ++t) {
      const Configuration& c = r.states[t];
      const std::string tail = "," + format_double(r.min_pair_distance[t]) + "," +
                               (r.alive[t] ? "1" : "0") + "\n";
      const std::string head = format_double(r.times[t]) + "," + std::to_string(r.replica_id) + ",";
      for (int i = 0; i < c.particles(); ++i) {
        out += head + std::to_string(i);
        for (double v : c.position(i)) out += "," + format_double(v);
        out += tail;
      }
    }
  }
  return out;
}

nlohmann::json to_json(const EnsembleSummary& s) {
  return {{"times", s.times},
          {"survival", s.survival},
          {"coord_mean", s.coord_mean},
          {"coord_variance", s.coord_variance},
          {"center_of_mass", s.center_of_mass},
          {"com_variance", s.com_variance},
          {"min_dist_edges", s.min_dist_edges},
          {"min_dist_histogram", s.min_dist_histogram}};
}

nlohmann::json to_json(const SimulationParams& p) {
  return {{"chi", p.model.chi},
          {"N", p.model.N},
          {"d", p.model.d},
          {"kernel", {{"name", p.model.kernel.name()}, {"params", p.model.kernel.params()}}},
          {"dt", p.dt},
          {"t_end", p.t_end},
          {"scheme", to_string(p.scheme)},
          {"taming_on", p.taming_on},
          {"master_seed", p.master_seed},
          {"replicas", p.replicas},
          {"absorb_min_dist", p.absorb_min_dist},
          {"absorb_radius", p.absorb_radius},
          {"record_stride", p.record_stride}};
}

}  // namespace aggdiff
