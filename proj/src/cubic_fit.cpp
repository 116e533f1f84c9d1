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

#include "abstain/cubic_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <set>
#include <vector>

#include "abstain/errors.hpp"

namespace abstain {

CubicFit fit_cubic(std::span<const std::pair<double, double>> points) {
  std::set<double> distinct;
  for (const auto& [x, y] : points) distinct.insert(x);
  if (distinct.size() < 4) {
    throw DegenerateFitError("cubic fit needs at least 4 distinct budgets, got " +
                             std::to_string(distinct.size()));
  }

  CubicFit fit;
  fit.budget_min = *distinct.begin();
  fit.budget_max = *distinct.rbegin();
  fit.points = points.size();

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = fit.rescale(points[static_cast<std::size_t>(i)].first);
    a(i, 0) = 1.0;
    a(i, 1) = x;
    a(i, 2) = x * x;
    a(i, 3) = x * x * x;
    y(i) = points[static_cast<std::size_t>(i)].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 4) throw DegenerateFitError("cubic design matrix is rank deficient");
  const Eigen::Vector4d c = qr.solve(y);
  for (int k = 0; k < 4; ++k) fit.coefficients[static_cast<std::size_t>(k)] = c(k);
  fit.residual_norm = (a * c - y).norm();
  return fit;
}

ConfidenceAxis parse_confidence_axis(std::string_view name) {
  if (name == "probability") return ConfidenceAxis::kProbability;
  if (name == "logprob") return ConfidenceAxis::kLogprob;
  throw ArgumentError("unknown confidence axis '" + std::string(name) +
                      "' (expected probability or logprob)");
}

ConfidenceTrends fit_confidence_trends(std::span<const AnswerRecord> records,
                                       ConfidenceAxis axis) {
  std::vector<std::pair<double, double>> correct;
  std::vector<std::pair<double, double>> incorrect;
  for (const auto& r : records) {
    if (r.parse_fail()) continue;
    const double v = axis == ConfidenceAxis::kProbability ? r.confidence : r.logprob_sum;
    (r.correct ? correct : incorrect).emplace_back(static_cast<double>(r.budget), v);
  }
  auto try_fit = [](const std::vector<std::pair<double, double>>& pts) -> std::optional<CubicFit> {
    try {
      return fit_cubic(pts);
    } catch (const DegenerateFitError&) {
      return std::nullopt;
    }
  };
  return {try_fit(correct), try_fit(incorrect)};
}

}  // namespace abstain
