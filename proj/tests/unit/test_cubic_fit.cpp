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

#include <gtest/gtest.h>

#include <cmath>

#include "abstain/cubic_fit.hpp"
#include "abstain/errors.hpp"
#include "test_support.hpp"

namespace abstain {
namespace {

using testing::Gen;
using testing::make_record;

constexpr double kCoefTol = 1e-9;

using Points = std::vector<std::pair<double, double>>;

Points planted(const std::vector<double>& budgets, const std::array<double, 4>& c) {
  const double lo = budgets.front(), hi = budgets.back();
  Points out;
  for (double b : budgets) {
    const double x = (b - lo) / (hi - lo);
    out.push_back({b, c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x});
  }
  return out;
}

TEST(FitCubic, RecoversPlantedCubic) {
  const std::array<double, 4> want = {1.0, -0.5, 0.25, -0.1};
  const auto pts = planted({500, 1500, 2000, 3100, 4000, 5200, 7000, 8000}, want);
  const auto fit = fit_cubic(pts);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(fit.coefficients[i], want[i], kCoefTol);
  EXPECT_NEAR(fit.residual_norm, 0.0, 1e-12);
  EXPECT_EQ(fit.points, 8u);
  EXPECT_EQ(fit.budget_min, 500.0);
  EXPECT_EQ(fit.budget_max, 8000.0);
  EXPECT_NEAR(fit(4000), pts[4].second, 1e-12);
}

TEST(FitCubic, FourPointsInterpolate) {
  const Points pts = {{100, 0.3}, {250, 0.9}, {400, 0.1}, {900, 0.7}};
  const auto fit = fit_cubic(pts);
  EXPECT_NEAR(fit.residual_norm, 0.0, 1e-12);
  for (const auto& [b, y] : pts) EXPECT_NEAR(fit(b), y, 1e-10);
}

TEST(FitCubic, DegenerateInputs) {
  EXPECT_THROW(fit_cubic(Points{{1, 1}, {2, 2}, {3, 3}}), DegenerateFitError);
  EXPECT_THROW(fit_cubic(Points{{1, 1}, {1, 2}, {2, 3}, {2, 4}, {3, 1}}), DegenerateFitError);
  EXPECT_THROW(fit_cubic(Points{}), DegenerateFitError);
}

TEST(FitCubicProperty, NoisyDataBeatsLineAndSolvesNormalEquations) {
  Gen g(601);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int iter = 0; iter < 300; ++iter) {
    Points pts;
    const int n = g.integer(5, 80);
    const double lo = g.uniform(0, 1000), span = g.uniform(100, 8000);
    const std::array<double, 4> c = {g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1),
                                     g.uniform(-1, 1)};
    for (int i = 0; i < n; ++i) {
      const double b = i < 2 ? lo + i * span : lo + g.uniform(0, span);
      const double x = (b - lo) / span;
      pts.push_back({b, c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x + noise(g.rng())});
    }
    const auto fit = fit_cubic(pts);

    std::vector<std::pair<long double, long double>> xy;
    for (const auto& [b, y] : pts) xy.push_back({fit.rescale(b), y});
    ASSERT_LE(fit.residual_norm, static_cast<double>(testing::oracle_linear_residual(xy)) + 1e-12);

    // A^T (A c - y) = 0, relative to ||A^T y||.
    long double grad[4] = {}, aty[4] = {};
    for (const auto& [x, y] : xy) {
      const long double p[4] = {1, x, x * x, x * x * x};
      long double r = -y;
      for (int k = 0; k < 4; ++k) r += p[k] * fit.coefficients[k];
      for (int k = 0; k < 4; ++k) {
        grad[k] += p[k] * r;
        aty[k] += p[k] * y;
      }
    }
    long double gn = 0, yn = 0;
    for (int k = 0; k < 4; ++k) {
      gn += grad[k] * grad[k];
      yn += aty[k] * aty[k];
    }
    ASSERT_LE(std::sqrt(gn), 1e-8 * std::max<long double>(std::sqrt(yn), 1e-300));

    const auto ref = testing::oracle_normal_equations(xy);
    for (int k = 0; k < 4; ++k) ASSERT_NEAR(fit.coefficients[k], static_cast<double>(ref[k]), 1e-6);
  }
}

TEST(ConfidenceTrends, PerClassAndParseFailExcluded) {
  std::vector<AnswerRecord> recs;
  for (int b = 100; b <= 800; b += 100) {
    const double x = (b - 100) / 700.0;
    recs.push_back(make_record("c" + std::to_string(b), b, 0.5 + 0.4 * x, true));
    recs.push_back(make_record("w" + std::to_string(b), b, 0.4 - 0.1 * x * x, false));
    recs.push_back(make_record("p" + std::to_string(b), b, 0.0, false, true));
  }
  const auto trends = fit_confidence_trends(recs, ConfidenceAxis::kProbability);
  ASSERT_TRUE(trends.correct);
  ASSERT_TRUE(trends.incorrect);
  EXPECT_EQ(trends.correct->points, 8u);
  EXPECT_EQ(trends.incorrect->points, 8u);
  EXPECT_NEAR(trends.correct->coefficients[1], 0.4, kCoefTol);
  EXPECT_NEAR(trends.incorrect->coefficients[2], -0.1, kCoefTol);

  const auto logs = fit_confidence_trends(recs, ConfidenceAxis::kLogprob);
  ASSERT_TRUE(logs.correct);
  Points log_pts;
  for (const auto& r : recs) {
    if (r.correct) log_pts.push_back({static_cast<double>(r.budget), r.logprob_sum});
  }
  EXPECT_EQ(logs.correct->coefficients, fit_cubic(log_pts).coefficients);

  // Too few distinct budgets in a class: no fit for it.
  std::vector<AnswerRecord> small = {make_record("a", 1, 0.5, true), make_record("b", 2, 0.5, true)};
  EXPECT_FALSE(fit_confidence_trends(small, ConfidenceAxis::kProbability).correct);
  EXPECT_THROW(parse_confidence_axis("log10"), ArgumentError);
}

}  // namespace
}  // namespace abstain
