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

// Selective answering and its accuracy / coverage / utility surfaces.
//
// A record is answered iff its confidence is strictly greater than the
// threshold, so threshold 0 answers everything except PARSE_FAIL records
// (confidence 0). Utility per question is 1 for a correct answer, 0 for an
// abstention and the scenario's incorrect_reward for a wrong answer.

#ifndef ABSTAIN_SURFACE_HPP_
#define ABSTAIN_SURFACE_HPP_

#include <span>
#include <string>
#include <vector>

#include "abstain/types.hpp"

namespace abstain {

struct Decision {
  bool answered = false;
  bool operator==(const Decision&) const = default;
};

// Throws ArgumentError unless 0 <= threshold < 1.
Decision select(double confidence, double threshold);
inline Decision select(const AnswerRecord& record, double threshold) {
  return select(record.confidence, threshold);
}

double utility(Decision decision, bool correct, const Scenario& scenario);

// All records must share one budget and carry distinct question ids.
SurfaceCell aggregate_cell(std::span<const AnswerRecord> records, double threshold,
                           const Scenario& scenario);

struct Surface {
  std::vector<int> budgets;
  std::vector<double> thresholds;
  std::vector<Scenario> scenarios;
  std::vector<SurfaceCell> cells;  // budget-major, then threshold, then scenario

  const SurfaceCell& at(std::size_t budget_idx, std::size_t threshold_idx,
                        std::size_t scenario_idx) const {
    return cells[(budget_idx * thresholds.size() + threshold_idx) * scenarios.size() +
                 scenario_idx];
  }
};

// Records for budgets outside `budgets` are ignored. If `budgets` is empty
// the distinct budgets present in `records` are used. Throws
// CompletenessError when some (question, budget) pair is missing and
// ArgumentError on duplicates or invalid thresholds.
Surface build_surface(std::span<const AnswerRecord> records, std::span<const int> budgets,
                      std::span<const double> thresholds, std::span<const Scenario> scenarios);

struct OptimalThreshold {
  double threshold = 0.0;
  double utility = 0.0;
  double coverage = 0.0;
};

// Exact maximizer of mean utility over thresholds in [0, 1). Candidates are 0
// and every observed confidence below 1; answering sets only change there.
// Ties go to the smallest threshold.
OptimalThreshold optimal_threshold(std::span<const AnswerRecord> records,
                                   const Scenario& scenario);

// Cells of one scenario at a fixed threshold, ordered by budget.
std::vector<SurfaceCell> slice_at_threshold(const Surface& surface, double threshold,
                                            const std::string& scenario);
// Cells of one scenario at a fixed budget, ordered by threshold.
std::vector<SurfaceCell> slice_at_budget(const Surface& surface, int budget,
                                         const std::string& scenario);

}  // namespace abstain

#endif  // ABSTAIN_SURFACE_HPP_
