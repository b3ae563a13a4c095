#include "aggdiff/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "aggdiff/errors.hpp"
#include "aggdiff/format.hpp"
#include "aggdiff/union_find.hpp"

namespace aggdiff {

Configuration::Configuration(int particles, int dim, std::vector<double> positions,
                             bool non_paper_regime)
    : particles_(particles),
      dim_(dim),
      positions_(std::move(positions)),
      non_paper_regime_(non_paper_regime) {
  if (particles_ < 2) {
    throw ParameterError("configuration needs N >= 2 particles");
  }
  if (dim_ < 1 || (dim_ < 2 && !non_paper_regime_)) {
    throw ParameterError("configuration needs d >= 2 (d = 1 requires non_paper_regime)");
  }
  if (positions_.size() != static_cast<std::size_t>(particles_) * dim_) {
    throw ParameterError("configuration expects N*d = " + std::to_string(particles_ * dim_) +
                         " coordinates, got " + std::to_string(positions_.size()));
  }
  for (double x : positions_) {
    if (!std::isfinite(x)) {
      throw ParameterError("configuration coordinates must be finite");
    }
  }
}

double Configuration::norm() const {
  double s = 0.0;
  for (double x : positions_) s += x * x;
  return std::sqrt(s);
}

double pair_distance(const Configuration& c, int i, int j) {
  const auto a = c.position(i);
  const auto b = c.position(j);
  double s = 0.0;
  for (int l = 0; l < c.dim(); ++l) {
    const double diff = a[l] - b[l];
    s += diff * diff;
  }
  return std::sqrt(s);
}

DistanceMatrix pairwise_distances(const Configuration& c) {
  DistanceMatrix m(c.particles());
  for (int i = 0; i < c.particles(); ++i) {
    for (int j = i + 1; j < c.particles(); ++j) {
      const double r = pair_distance(c, i, j);
      m(i, j) = r;
      m(j, i) = r;
    }
  }
  return m;
}

double min_pair_distance(const Configuration& c) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.particles(); ++i) {
    for (int j = i + 1; j < c.particles(); ++j) {
      const double r = pair_distance(c, i, j);
      if (r > 0.0) best = std::min(best, r);
    }
  }
  return best;
}

ClusterReport cluster_report(const Configuration& c, double tol) {
  const int n = c.particles();
  DisjointSet sets(static_cast<std::size_t>(n));
  double min_pos = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = pair_distance(c, i, j);
      if (r > 0.0) min_pos = std::min(min_pos, r);
      if (r <= tol) sets.unite(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  // Iterating i ascending makes each group's first member its smallest, so
  // insertion order is the labelling by smallest member.
  std::map<std::size_t, std::size_t> slot;
  ClusterReport out;
  for (int i = 0; i < n; ++i) {
    const std::size_t root = sets.find(static_cast<std::size_t>(i));
    auto [it, fresh] = slot.emplace(root, out.groups.size());
    if (fresh) out.groups.emplace_back();
    out.groups[it->second].push_back(i);
  }
  for (const auto& g : out.groups) {
    out.max_multiplicity = std::max(out.max_multiplicity, static_cast<int>(g.size()));
  }
  out.min_pair_distance = min_pos;
  return out;
}

bool in_Eq(const Configuration& c, int q, double tol) {
  if (q < 2 || q > c.particles() + 1) {
    throw ParameterError("E_q requires 2 <= q <= N+1, got q = " + std::to_string(q));
  }
  if (tol < 0.0) {
    throw ParameterError("coincidence tolerance must be >= 0");
  }
  return cluster_report(c, tol).max_multiplicity <= q - 1;
}

bool in_nodal_set(const Configuration& c, const KernelSpec& k, double tol) {
  // m vanishes only where some k(r_ij) = +inf, i.e. at collisions of a
  // decreasing kernel that blows up at the origin.
  if (k.increasing() || k.limit_at_zero().kind != LimitAtZero::Kind::PlusInfinity) {
    return false;
  }
  for (int i = 0; i < c.particles(); ++i) {
    for (int j = i + 1; j < c.particles(); ++j) {
      if (pair_distance(c, i, j) <= tol) return true;
    }
  }
  return false;
}

nlohmann::json to_json(const Configuration& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < c.particles(); ++i) {
    const auto p = c.position(i);
    rows.push_back(std::vector<double>(p.begin(), p.end()));
  }
  return {{"N", c.particles()}, {"d", c.dim()}, {"positions", rows}};
}

Configuration configuration_from_json(const nlohmann::json& j, bool non_paper_regime) {
  if (!j.is_object()) throw InputError("configuration JSON must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "N" && key != "d" && key != "positions") {
      throw InputError("configuration JSON: unknown field '" + key + "'");
    }
  }
  if (!j.contains("N") || !j.contains("d") || !j.contains("positions")) {
    throw InputError("configuration JSON requires fields N, d, positions");
  }
  const int n = j.at("N").get<int>();
  const int d = j.at("d").get<int>();
  const auto& rows = j.at("positions");
  if (!rows.is_array() || static_cast<int>(rows.size()) != n) {
    throw InputError("configuration JSON: positions must hold N rows");
  }
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n) * d);
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      throw InputError("configuration JSON: each position row must hold d numbers");
    }
    for (const auto& x : row) flat.push_back(x.get<double>());
  }
  return Configuration(n, d, std::move(flat), non_paper_regime);
}

std::string to_csv(const Configuration& c) {
  std::string out = "particle";
  for (int l = 0; l < c.dim(); ++l) out += ",coord_" + std::to_string(l);
  out += '\n';
  for (int i = 0; i < c.particles(); ++i) {
    out += std::to_string(i);
    for (double x : c.position(i)) out += "," + format_double(x);
    out += '\n';
  }
  return out;
}

Configuration read_configuration(const std::filesystem::path& path, bool non_paper_regime) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open configuration " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("configuration " + path.string() + ": " + e.what());
  }
  return configuration_from_json(j, non_paper_regime);
}

}  // namespace aggdiff
