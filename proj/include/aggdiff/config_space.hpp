#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggdiff/kernels.hpp"

namespace aggdiff {

/// N particles in d-dimensional space, stored row-major (particle, coordinate).
///
/// d >= 2 is the regime the model is stated for; d = 1 is admitted only when
/// non_paper_regime is set (cheap oracle tests).
class Configuration {
 public:
  Configuration(int particles, int dim, std::vector<double> positions,
                bool non_paper_regime = false);

  int particles() const { return particles_; }
  int dim() const { return dim_; }
  bool non_paper_regime() const { return non_paper_regime_; }

  std::span<const double> coords() const { return positions_; }
  std::span<double> coords() { return positions_; }
  std::span<const double> position(int i) const {
    return std::span<const double>(positions_).subspan(static_cast<std::size_t>(i) * dim_, dim_);
  }
  std::span<double> position(int i) {
    return std::span<double>(positions_).subspan(static_cast<std::size_t>(i) * dim_, dim_);
  }
  double& at(int i, int l) { return positions_[static_cast<std::size_t>(i) * dim_ + l]; }
  double at(int i, int l) const { return positions_[static_cast<std::size_t>(i) * dim_ + l]; }

  /// Euclidean norm of the whole configuration vector in R^{N d}.
  double norm() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  int particles_;
  int dim_;
  std::vector<double> positions_;
  bool non_paper_regime_;
};

/// Dense symmetric matrix of pairwise distances.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * n, 0.0) {}
  int size() const { return n_; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }
  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * n_ + j]; }

 private:
  int n_;
  std::vector<double> data_;
};

double pair_distance(const Configuration& c, int i, int j);
DistanceMatrix pairwise_distances(const Configuration& c);

/// Smallest strictly positive pairwise distance (infinity when there is none).
double min_pair_distance(const Configuration& c);

/// Partition of particle indices (0-based) into coincidence groups.
struct ClusterReport {
  std::vector<std::vector<int>> groups;  // each sorted; ordered by smallest member
  int max_multiplicity = 0;
  double min_pair_distance = 0.0;
};

/// Groups particles connected by chains of pairwise distances <= tol.
ClusterReport cluster_report(const Configuration& c, double tol);

/// Membership in E_q: no q particles share a position (within tol).
/// Requires 2 <= q <= N+1; tol = 0 means exact coincidence.
bool in_Eq(const Configuration& c, int q, double tol = 0.0);

/// Membership in the zero set of the weight m.
bool in_nodal_set(const Configuration& c, const KernelSpec& k, double tol = 0.0);

nlohmann::json to_json(const Configuration& c);
Configuration configuration_from_json(const nlohmann::json& j, bool non_paper_regime = false);

/// Rows "particle,coord_0,...,coord_{d-1}" with header.
std::string to_csv(const Configuration& c);

Configuration read_configuration(const std::filesystem::path& path, bool non_paper_regime = false);

}  // namespace aggdiff
