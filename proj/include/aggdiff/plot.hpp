#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace aggdiff {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool fixed_y = false;  // use [y_min, y_max] instead of the data range
  double y_min = 0.0;
  double y_max = 1.0;
};

/// SVG line chart; each series becomes one <path> element.
std::string svg_line_chart(const std::vector<Series>& series, const ChartOptions& opts);

/// survival.svg from an ensemble summary JSON.
std::map<std::string, std::string> plot_summary(const nlohmann::json& summary);

/// min_distance.svg and paths.svg from trajectory CSV text. Paths are
/// projected to the first two configuration-space coordinates.
std::map<std::string, std::string> plot_trajectories(const std::string& csv);

}  // namespace aggdiff
