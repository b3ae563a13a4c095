#include "aggdiff/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "aggdiff/errors.hpp"
#include "aggdiff/format.hpp"

namespace aggdiff {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string num(double v) {
  return format_double(std::round(v * 100.0) / 100.0);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw InputError("trajectory CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

std::string svg_line_chart(const std::vector<Series>& series, const ChartOptions& opts) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) {
    x0 = 0.0;
    x1 = 1.0;
    y0 = 0.0;
    y1 = 1.0;
  }
  if (opts.fixed_y) {
    y0 = opts.y_min;
    y1 = opts.y_max;
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pw = kWidth - 2 * kMargin;
  const double ph = kHeight - 2 * kMargin;
  auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  out += "<text x=\"320\" y=\"25\" text-anchor=\"middle\" font-size=\"16\">" +
         escape(opts.title) + "</text>\n";
  out += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kHeight - kMargin) + "\" x2=\"" +
         num(kWidth - kMargin) + "\" y2=\"" + num(kHeight - kMargin) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kMargin) + "\" x2=\"" + num(kMargin) +
         "\" y2=\"" + num(kHeight - kMargin) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"320\" y=\"390\" text-anchor=\"middle\" font-size=\"12\">" +
         escape(opts.x_label) + "</text>\n";
  out += "<text x=\"15\" y=\"200\" text-anchor=\"middle\" font-size=\"12\" "
         "transform=\"rotate(-90 15 200)\">" +
         escape(opts.y_label) + "</text>\n";
  out += "<text x=\"" + num(kMargin) + "\" y=\"" + num(kHeight - kMargin + 15) +
         "\" font-size=\"10\">" + format_double(x0) + "</text>\n";
  out += "<text x=\"" + num(kWidth - kMargin) + "\" y=\"" + num(kHeight - kMargin + 15) +
         "\" text-anchor=\"end\" font-size=\"10\">" + format_double(x1) + "</text>\n";
  out += "<text x=\"" + num(kMargin - 4) + "\" y=\"" + num(kHeight - kMargin) +
         "\" text-anchor=\"end\" font-size=\"10\">" + format_double(y0) + "</text>\n";
  out += "<text x=\"" + num(kMargin - 4) + "\" y=\"" + num(kMargin + 4) +
         "\" text-anchor=\"end\" font-size=\"10\">" + format_double(y1) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::string d;
    bool pen_down = false;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen_down = false;
        continue;
      }
      d += (pen_down ? " L " : (d.empty() ? "M " : " M ")) + num(px(s.x[i])) + " " +
           num(py(s.y[i]));
      pen_down = true;
    }
    out += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + kColors[k % 8] +
           "\" stroke-width=\"1.5\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

std::map<std::string, std::string> plot_summary(const nlohmann::json& summary) {
  const nlohmann::json* ens = &summary;
  if (summary.is_object() && summary.contains("ensemble")) ens = &summary.at("ensemble");
  if (!ens->is_object() || !ens->contains("times") || !ens->contains("survival")) {
    throw InputError("summary JSON lacks times/survival");
  }
  Series s;
  try {
    s.x = ens->at("times").get<std::vector<double>>();
    s.y = ens->at("survival").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("summary JSON: ") + e.what());
  }
  if (s.x.empty()) throw InputError("summary JSON has no records");
  if (s.x.size() != s.y.size()) throw InputError("summary JSON: times/survival length mismatch");
  ChartOptions o{"Survival", "t", "P(tau > t)", true, 0.0, 1.05};
  return {{"survival.svg", svg_line_chart({s}, o)}};
}

std::map<std::string, std::string> plot_trajectories(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw InputError("trajectory CSV is empty");
  const auto header = split(line);
  if (header.size() < 6 || header[0] != "t" || header[1] != "replica" || header[2] != "particle" ||
      header[header.size() - 2] != "min_dist" || header.back() != "alive") {
    throw InputError("trajectory CSV has an unexpected header");
  }
  const std::size_t d = header.size() - 5;

  std::map<long long, Series> mind;
  // first two configuration-space coordinates: x^0_0, x^0_1 (or x^1_0 when d = 1)
  std::map<long long, Series> path;
  std::map<long long, double> pending_x;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw InputError("trajectory CSV line " + std::to_string(lineno) + ": wrong column count");
    }
    const double t = parse_number(cells[0], lineno);
    const long long rep = static_cast<long long>(parse_number(cells[1], lineno));
    const long long particle = static_cast<long long>(parse_number(cells[2], lineno));
    if (particle == 0) {
      mind[rep].x.push_back(t);
      mind[rep].y.push_back(parse_number(cells[header.size() - 2], lineno));
      if (d >= 2) {
        path[rep].x.push_back(parse_number(cells[3], lineno));
        path[rep].y.push_back(parse_number(cells[4], lineno));
      } else {
        pending_x[rep] = parse_number(cells[3], lineno);
      }
    } else if (particle == 1 && d == 1) {
      path[rep].x.push_back(pending_x[rep]);
      path[rep].y.push_back(parse_number(cells[3], lineno));
    }
  }
  if (mind.empty()) throw InputError("trajectory CSV has no records");
  std::vector<Series> md, paths;
  for (auto& [rep, s] : mind) md.push_back(std::move(s));
  for (auto& [rep, s] : path) paths.push_back(std::move(s));
  return {
      {"min_distance.svg",
       svg_line_chart(md, {"Minimum pair distance", "t", "min distance", false, 0, 1})},
      {"paths.svg", svg_line_chart(paths, {"Sample paths", "coordinate 0", "coordinate 1", false,
                                           0, 1})},
  };
}

}  // namespace aggdiff
