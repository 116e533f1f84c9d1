/*
 * Copyright 2026 The Abstain Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "abstain/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "abstain/errors.hpp"
#include "abstain/record_store.hpp"
#include "abstain/run_config.hpp"

namespace abstain {
namespace {

constexpr double kPanelWidth = 360;
constexpr double kPanelHeight = 240;
constexpr double kMargin = 56;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string open_svg(double width, double height, const std::string& config_hash,
                     const std::string& title) {
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
       fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) +
       "\" data-config-hash=\"" + escape(config_hash) + "\">\n";
  s += "<title>" + escape(title) + "</title>\n";
  s += "<desc>config_hash=" + escape(config_hash) + "</desc>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  return s;
}

std::string close_svg() { return "</g>\n</svg>\n"; }

std::string text(double x, double y, std::string_view body, std::string_view anchor = "middle",
                 std::string_view extra = "") {
  return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" text-anchor=\"" + std::string(anchor) +
         "\"" + std::string(extra) + ">" + escape(body) + "</text>\n";
}

std::string line(double x1, double y1, double x2, double y2, std::string_view attrs) {
  return "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
         fmt(y2) + "\" " + std::string(attrs) + "/>\n";
}

// Frame, ticks and axis labels.
std::string axes(const PlotFrame& f, std::string_view x_label, std::string_view y_label) {
  std::string s;
  s += "<rect x=\"" + fmt(f.left) + "\" y=\"" + fmt(f.top) + "\" width=\"" + fmt(f.width) +
       "\" height=\"" + fmt(f.height) + "\" fill=\"none\" stroke=\"#444444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x_min + (f.x_max - f.x_min) * i / 4.0;
    const double y = f.y_min + (f.y_max - f.y_min) * i / 4.0;
    s += line(f.px(x), f.top + f.height, f.px(x), f.top + f.height + 4, "stroke=\"#444444\"");
    s += text(f.px(x), f.top + f.height + 16, label(std::round(x * 1000) / 1000));
    s += line(f.left - 4, f.py(y), f.left, f.py(y), "stroke=\"#444444\"");
    s += text(f.left - 6, f.py(y) + 4, label(std::round(y * 1000) / 1000), "end");
  }
  s += text(f.left + f.width / 2, f.top + f.height + 32, x_label);
  s += text(f.left - 40, f.top + f.height / 2, y_label, "middle",
            " transform=\"rotate(-90 " + fmt(f.left - 40) + " " + fmt(f.top + f.height / 2) + ")\"");
  return s;
}

const Scenario& find_scenario(const Surface& surface, const std::string& name,
                              std::size_t* index) {
  for (std::size_t i = 0; i < surface.scenarios.size(); ++i) {
    if (surface.scenarios[i].name == name) {
      *index = i;
      return surface.scenarios[i];
    }
  }
  std::string known;
  for (const auto& s : surface.scenarios) known += (known.empty() ? "" : ", ") + s.name;
  throw LookupError("scenario '" + name + "' is not in the surface (have " + known + ")", {});
}

// Sequential palette from pale yellow (coverage 0) to dark blue (coverage 1).
std::string coverage_colour(double c) {
  static constexpr std::array<std::array<double, 3>, 3> kStops = {
      {{255, 247, 188}, {65, 182, 196}, {8, 29, 88}}};
  c = std::clamp(c, 0.0, 1.0);
  const double pos = c * 2.0;
  const int i = std::min(1, static_cast<int>(pos));
  const double t = pos - i;
  char buf[8];
  int rgb[3];
  for (int k = 0; k < 3; ++k) {
    rgb[k] = static_cast<int>(std::lround(kStops[i][k] + (kStops[i + 1][k] - kStops[i][k]) * t));
  }
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace

std::string_view to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::kThresholdSlices: return "threshold_slices";
    case PlotKind::kUtilitySurface: return "utility_surface";
    case PlotKind::kConfidenceScatter: return "confidence_scatter";
  }
  return "threshold_slices";
}

PlotKind parse_plot_kind(std::string_view name) {
  if (name == "threshold_slices") return PlotKind::kThresholdSlices;
  if (name == "utility_surface") return PlotKind::kUtilitySurface;
  if (name == "confidence_scatter") return PlotKind::kConfidenceScatter;
  throw ArgumentError("kind: unknown plot kind '" + std::string(name) +
                      "' (expected threshold_slices, utility_surface or confidence_scatter)");
}

SliceMetric parse_slice_metric(std::string_view name) {
  if (name == "accuracy") return SliceMetric::kAccuracy;
  if (name == "utility") return SliceMetric::kUtility;
  throw ArgumentError("metric: unknown metric '" + std::string(name) +
                      "' (expected accuracy or utility)");
}

std::string svg_threshold_slices(const SurfaceReport& report, const std::string& scenario,
                                 SliceMetric metric) {
  const Surface& s = report.surface;
  std::size_t si = 0;
  find_scenario(s, scenario, &si);
  const std::size_t panels = s.thresholds.size();
  const double width = panels * (kPanelWidth + kMargin) + kMargin;
  const double height = kPanelHeight + 2 * kMargin + 20;

  double y_min = 0.0, y_max = 1.0;
  if (metric == SliceMetric::kUtility) {
    for (const auto& c : s.cells) {
      if (c.scenario.name != scenario) continue;
      y_min = std::min(y_min, c.mean_utility);
      y_max = std::max(y_max, c.mean_utility);
    }
  }
  const double x_min = s.budgets.front();
  const double x_max = s.budgets.size() > 1 ? s.budgets.back() : s.budgets.front() + 1.0;
  const std::string metric_name =
      metric == SliceMetric::kAccuracy ? "answered accuracy" : "mean utility";

  std::string out = open_svg(width, height, report.config_hash,
                             "Threshold slices: " + metric_name + " vs budget (" + scenario + ")");
  for (std::size_t ti = 0; ti < panels; ++ti) {
    PlotFrame f;
    f.left = kMargin + ti * (kPanelWidth + kMargin);
    f.top = kMargin;
    f.width = kPanelWidth;
    f.height = kPanelHeight;
    f.x_min = x_min;
    f.x_max = x_max;
    f.y_min = y_min;
    f.y_max = y_max;
    out += "<g class=\"panel\" data-threshold=\"" + label(s.thresholds[ti]) + "\">\n";
    out += text(f.left + f.width / 2, f.top - 12,
                "\xcf\x84 = " + label(s.thresholds[ti]) + " (" + scenario + ")");
    out += axes(f, "thinking budget (tokens)", metric_name);
    if (metric == SliceMetric::kUtility && y_min < 0.0 && y_max > 0.0) {
      out += line(f.left, f.py(0), f.left + f.width, f.py(0),
                  "stroke=\"#999999\" stroke-dasharray=\"4 3\"");
    }
    std::string points;
    for (std::size_t bi = 0; bi < s.budgets.size(); ++bi) {
      const SurfaceCell& c = s.at(bi, ti, si);
      const double v = metric == SliceMetric::kAccuracy ? c.answered_accuracy : c.mean_utility;
      points += (points.empty() ? "" : " ") + fmt(f.px(c.budget)) + "," + fmt(f.py(v));
      out += "<circle cx=\"" + fmt(f.px(c.budget)) + "\" cy=\"" + fmt(f.py(v)) +
             "\" r=\"2\" fill=\"#1f77b4\"><title>budget " + std::to_string(c.budget) + ": " +
             metric_name + " " + label(v) + ", coverage " + label(c.coverage) +
             "</title></circle>\n";
    }
    out += "<polyline class=\"slice\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" "
           "points=\"" + points + "\"/>\n";
    out += "</g>\n";
  }
  out += close_svg();
  return out;
}

std::string svg_utility_surface(const SurfaceReport& report, const std::string& scenario) {
  const Surface& s = report.surface;
  std::size_t si = 0;
  find_scenario(s, scenario, &si);
  const std::size_t nb = s.budgets.size();
  const std::size_t nt = s.thresholds.size();
  const double cell_w = std::max(4.0, std::min(40.0, 640.0 / nb));
  const double cell_h = std::max(12.0, std::min(40.0, 320.0 / nt));
  const double left = kMargin + 20;
  const double top = kMargin;
  const double grid_w = cell_w * nb;
  const double grid_h = cell_h * nt;
  const double width = left + grid_w + 140;
  const double height = top + grid_h + 70;

  std::string out = open_svg(width, height, report.config_hash,
                             "Utility surface (" + scenario + "), colour = coverage");
  out += text(left + grid_w / 2, top - 16,
              "mean utility over budget x threshold (" + scenario + "); colour = coverage");

  // Row 0 is drawn at the bottom so thresholds grow upwards.
  auto cell_x = [&](std::size_t bi) { return left + bi * cell_w; };
  auto cell_y = [&](std::size_t ti) { return top + (nt - 1 - ti) * cell_h; };

  out += "<g class=\"cells\">\n";
  for (std::size_t bi = 0; bi < nb; ++bi) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const SurfaceCell& c = s.at(bi, ti, si);
      out += "<rect class=\"cell\" x=\"" + fmt(cell_x(bi)) + "\" y=\"" + fmt(cell_y(ti)) +
             "\" width=\"" + fmt(cell_w) + "\" height=\"" + fmt(cell_h) + "\" fill=\"" +
             coverage_colour(c.coverage) + "\" data-utility=\"" + format_number(c.mean_utility) +
             "\"><title>budget " + std::to_string(c.budget) + ", \xcf\x84 " + label(c.threshold) +
             ": utility " + label(c.mean_utility) + ", coverage " + label(c.coverage) +
             "</title></rect>\n";
    }
  }
  out += "</g>\n";

  // Zero-utility contour: edges between a positive and a non-positive cell,
  // plus the grid border where a positive region touches it.
  auto positive = [&](std::size_t bi, std::size_t ti) { return s.at(bi, ti, si).mean_utility > 0; };
  std::string contour;
  for (std::size_t bi = 0; bi < nb; ++bi) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      if (bi + 1 < nb && positive(bi, ti) != positive(bi + 1, ti)) {
        const double x = cell_x(bi + 1);
        contour += "M" + fmt(x) + " " + fmt(cell_y(ti)) + "V" + fmt(cell_y(ti) + cell_h);
      }
      if (ti + 1 < nt && positive(bi, ti) != positive(bi, ti + 1)) {
        const double y = cell_y(ti);
        contour += "M" + fmt(cell_x(bi)) + " " + fmt(y) + "H" + fmt(cell_x(bi) + cell_w);
      }
    }
  }
  out += "<path class=\"zero-contour\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2.5\" d=\"" +
         contour + "\"/>\n";

  out += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(grid_w) +
         "\" height=\"" + fmt(grid_h) + "\" fill=\"none\" stroke=\"#444444\"/>\n";
  const std::size_t step = std::max<std::size_t>(1, nb / 8);
  for (std::size_t bi = 0; bi < nb; bi += step) {
    out += text(cell_x(bi) + cell_w / 2, top + grid_h + 16, std::to_string(s.budgets[bi]));
  }
  for (std::size_t ti = 0; ti < nt; ++ti) {
    out += text(left - 6, cell_y(ti) + cell_h / 2 + 4, label(s.thresholds[ti]), "end");
  }
  out += text(left + grid_w / 2, top + grid_h + 36, "thinking budget (tokens)");
  out += text(left - 44, top + grid_h / 2, "threshold", "middle",
              " transform=\"rotate(-90 " + fmt(left - 44) + " " + fmt(top + grid_h / 2) + ")\"");

  // Legend.
  const double lx = left + grid_w + 24;
  for (int k = 0; k <= 10; ++k) {
    const double y = top + (10 - k) * 12.0;
    out += "<rect x=\"" + fmt(lx) + "\" y=\"" + fmt(y) + "\" width=\"14\" height=\"12\" fill=\"" +
           coverage_colour(k / 10.0) + "\"/>\n";
  }
  out += text(lx + 20, top + 10, "coverage 1", "start");
  out += text(lx + 20, top + 130, "coverage 0", "start");
  out += line(lx, top + 160, lx + 14, top + 160, "stroke=\"#d62728\" stroke-width=\"2.5\"");
  out += text(lx + 20, top + 164, "utility = 0", "start");
  out += close_svg();
  return out;
}

ScatterPlot svg_confidence_scatter(std::span<const AnswerRecord> records, ConfidenceAxis axis,
                                   const std::string& config_hash) {
  ScatterPlot plot;
  plot.trends = fit_confidence_trends(records, axis);
  auto value = [&](const AnswerRecord& r) {
    return axis == ConfidenceAxis::kProbability ? r.confidence : r.logprob_sum;
  };

  double b_min = INFINITY, b_max = -INFINITY, v_min = INFINITY, v_max = -INFINITY;
  for (const auto& r : records) {
    if (r.parse_fail()) continue;
    b_min = std::min(b_min, static_cast<double>(r.budget));
    b_max = std::max(b_max, static_cast<double>(r.budget));
    v_min = std::min(v_min, value(r));
    v_max = std::max(v_max, value(r));
  }
  if (!std::isfinite(b_min)) throw ArgumentError("confidence_scatter: no parsed records to plot");
  if (b_max == b_min) b_max = b_min + 1;

  static constexpr int kVertices = 101;
  for (const auto* fit : {&plot.trends.correct, &plot.trends.incorrect}) {
    if (!*fit) continue;
    for (int i = 0; i < kVertices; ++i) {
      const double b = (*fit)->budget_min + ((*fit)->budget_max - (*fit)->budget_min) * i / (kVertices - 1.0);
      v_min = std::min(v_min, (**fit)(b));
      v_max = std::max(v_max, (**fit)(b));
    }
  }
  if (axis == ConfidenceAxis::kProbability) {
    v_min = std::min(v_min, 0.0);
    v_max = std::max(v_max, 1.0);
  } else {
    v_max = std::max(v_max, 0.0);
    if (v_max == v_min) v_min = v_max - 1;
    const double pad = 0.05 * (v_max - v_min);
    v_min -= pad;
  }

  PlotFrame& f = plot.frame;
  f.left = kMargin + 20;
  f.top = kMargin;
  f.width = 560;
  f.height = 340;
  f.x_min = b_min;
  f.x_max = b_max;
  f.y_min = v_min;
  f.y_max = v_max;

  const std::string y_name =
      axis == ConfidenceAxis::kProbability ? "confidence (probability)" : "confidence (log-prob sum)";
  std::string& out = plot.svg;
  out = open_svg(f.left + f.width + 160, f.top + f.height + 70, config_hash,
                 "Confidence vs budget with cubic trends");
  out += axes(f, "thinking budget (tokens)", y_name);

  out += "<g class=\"points\">\n";
  for (const auto& r : records) {
    if (r.parse_fail()) continue;
    out += "<circle class=\"" + std::string(r.correct ? "pt-correct" : "pt-incorrect") +
           "\" cx=\"" + fmt(f.px(r.budget)) + "\" cy=\"" + fmt(f.py(value(r))) +
           "\" r=\"2\" fill=\"" + (r.correct ? "#2ca02c" : "#d62728") +
           "\" fill-opacity=\"0.5\"/>\n";
  }
  out += "</g>\n";

  auto trend = [&](const std::optional<CubicFit>& fit, const char* cls, const char* colour) {
    if (!fit) return;
    std::string points;
    for (int i = 0; i < kVertices; ++i) {
      const double b = fit->budget_min + (fit->budget_max - fit->budget_min) * i / (kVertices - 1.0);
      points += (points.empty() ? "" : " ") + fmt(f.px(b)) + "," + fmt(f.py((*fit)(b)));
    }
    out += "<polyline class=\"" + std::string(cls) + "\" fill=\"none\" stroke=\"" + colour +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
  };
  trend(plot.trends.correct, "trend-correct", "#1b7a1b");
  trend(plot.trends.incorrect, "trend-incorrect", "#a11a1a");

  const double lx = f.left + f.width + 16;
  out += "<circle cx=\"" + fmt(lx) + "\" cy=\"" + fmt(f.top + 10) + "\" r=\"4\" fill=\"#2ca02c\"/>\n";
  out += text(lx + 10, f.top + 14, "correct", "start");
  out += "<circle cx=\"" + fmt(lx) + "\" cy=\"" + fmt(f.top + 30) + "\" r=\"4\" fill=\"#d62728\"/>\n";
  out += text(lx + 10, f.top + 34, "incorrect", "start");
  out += text(lx, f.top + 58, "lines: cubic fit", "start");
  out += close_svg();
  return plot;
}

std::filesystem::path write_plot(const PlotRequest& request) {
  std::string svg;
  std::string name = std::string(to_string(request.kind));
  switch (request.kind) {
    case PlotKind::kThresholdSlices: {
      const auto report = load_surface(request.input);
      svg = svg_threshold_slices(report, request.scenario, request.metric);
      name += "_" + request.scenario +
              (request.metric == SliceMetric::kAccuracy ? "_accuracy" : "_utility");
      break;
    }
    case PlotKind::kUtilitySurface: {
      const auto report = load_surface(request.input);
      svg = svg_utility_surface(report, request.scenario);
      name += "_" + request.scenario;
      break;
    }
    case PlotKind::kConfidenceScatter: {
      const auto records = load_records(request.input);
      svg = svg_confidence_scatter(records, request.axis, recorded_config_hash(request.input)).svg;
      name += request.axis == ConfidenceAxis::kProbability ? "_probability" : "_logprob";
      break;
    }
  }
  std::filesystem::create_directories(request.out_dir.empty() ? "." : request.out_dir);
  const auto path = (request.out_dir.empty() ? std::filesystem::path(".") : request.out_dir) /
                    (name + ".svg");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << svg;
  out.flush();
  if (!out) throw IoError("writing '" + path.string() + "' failed");
  return path;
}

}  // namespace abstain
