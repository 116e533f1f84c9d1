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

// Self-contained SVG figures. Every image carries the config hash in a
// data-config-hash attribute on the root element and in its <desc>.

#ifndef ABSTAIN_SVG_PLOT_HPP_
#define ABSTAIN_SVG_PLOT_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "abstain/cubic_fit.hpp"
#include "abstain/surface_io.hpp"
#include "abstain/types.hpp"

namespace abstain {

enum class PlotKind { kThresholdSlices, kUtilitySurface, kConfidenceScatter };
std::string_view to_string(PlotKind kind);
PlotKind parse_plot_kind(std::string_view name);

enum class SliceMetric { kAccuracy, kUtility };
SliceMetric parse_slice_metric(std::string_view name);

// Linear map from a data rectangle onto a pixel rectangle (y grows down).
struct PlotFrame {
  double left = 0, top = 0, width = 1, height = 1;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;

  double px(double x) const { return left + (x - x_min) / (x_max - x_min) * width; }
  double py(double y) const { return top + (y_max - y) / (y_max - y_min) * height; }
  double data_x(double px_) const { return x_min + (px_ - left) / width * (x_max - x_min); }
  double data_y(double py_) const { return y_max - (py_ - top) / height * (y_max - y_min); }
};

// One panel per threshold: metric against budget for `scenario`. The
// accuracy metric plots answered accuracy; utility plots mean utility.
std::string svg_threshold_slices(const SurfaceReport& report, const std::string& scenario,
                                 SliceMetric metric);

// Budget x threshold grid for `scenario`, coloured by coverage, with the
// boundary between positive and non-positive mean utility drawn as a
// contour along cell edges.
std::string svg_utility_surface(const SurfaceReport& report, const std::string& scenario);

struct ScatterPlot {
  std::string svg;
  PlotFrame frame;
  ConfidenceTrends trends;
};

// Confidence against budget, one colour per correctness class, plus each
// class's cubic trend as a polyline (class trend-correct / trend-incorrect).
ScatterPlot svg_confidence_scatter(std::span<const AnswerRecord> records, ConfidenceAxis axis,
                                   const std::string& config_hash);

struct PlotRequest {
  PlotKind kind = PlotKind::kThresholdSlices;
  std::filesystem::path input;  // surface.json, or a records file for the scatter
  std::string scenario = "exam";
  SliceMetric metric = SliceMetric::kAccuracy;
  ConfidenceAxis axis = ConfidenceAxis::kProbability;
  std::filesystem::path out_dir;
};

// Renders and writes one image; returns its path.
std::filesystem::path write_plot(const PlotRequest& request);

}  // namespace abstain

#endif  // ABSTAIN_SVG_PLOT_HPP_
