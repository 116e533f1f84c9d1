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

#ifndef ABSTAIN_CUBIC_FIT_HPP_
#define ABSTAIN_CUBIC_FIT_HPP_

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

#include "abstain/types.hpp"

namespace abstain {

// Least-squares cubic y = c0 + c1 x + c2 x^2 + c3 x^3 where
// x = (budget - budget_min) / (budget_max - budget_min) lies in [0, 1].
struct CubicFit {
  std::array<double, 4> coefficients{};
  double budget_min = 0.0;
  double budget_max = 1.0;
  double residual_norm = 0.0;  // ||A c - y||_2
  std::size_t points = 0;

  double rescale(double budget) const {
    return (budget - budget_min) / (budget_max - budget_min);
  }
  double operator()(double budget) const {
    const double x = rescale(budget);
    return coefficients[0] + x * (coefficients[1] + x * (coefficients[2] + x * coefficients[3]));
  }
};

// Solved by column-pivoted Householder QR on the rescaled Vandermonde matrix.
// Throws DegenerateFitError with fewer than four distinct budgets.
CubicFit fit_cubic(std::span<const std::pair<double, double>> points);

enum class ConfidenceAxis { kProbability, kLogprob };
ConfidenceAxis parse_confidence_axis(std::string_view name);

struct ConfidenceTrends {
  std::optional<CubicFit> correct;    // nullopt when the class is too small to fit
  std::optional<CubicFit> incorrect;
};

// Fits one cubic per correctness class over (budget, confidence) points.
// PARSE_FAIL records carry no confidence and are left out.
ConfidenceTrends fit_confidence_trends(std::span<const AnswerRecord> records,
                                       ConfidenceAxis axis);

}  // namespace abstain

#endif  // ABSTAIN_CUBIC_FIT_HPP_
