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

#include "abstain/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "abstain/errors.hpp"

namespace abstain {
namespace {

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    std::ostringstream msg;
    msg << "threshold " << threshold << " is outside [0, 1)";
    throw ArgumentError(msg.str());
  }
}

SurfaceCell make_cell(int budget, double threshold, const Scenario& scenario, std::size_t total,
                      std::size_t answered, std::size_t correct) {
  SurfaceCell c;
  c.budget = budget;
  c.threshold = threshold;
  c.scenario = scenario;
  c.n_total = total;
  c.n_answered = answered;
  c.n_correct = correct;
  const auto n = static_cast<double>(total);
  c.coverage = static_cast<double>(answered) / n;
  c.answered_accuracy =
      answered == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(answered);
  const auto wrong = static_cast<double>(answered - correct);
  c.mean_utility = (static_cast<double>(correct) + scenario.incorrect_reward * wrong) / n;
  return c;
}

std::string format_values(const std::vector<double>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? ", " : "") << values[i];
  return out.str();
}

std::size_t scenario_index(const Surface& surface, const std::string& name) {
  for (std::size_t i = 0; i < surface.scenarios.size(); ++i) {
    if (surface.scenarios[i].name == name) return i;
  }
  std::string known;
  for (const auto& s : surface.scenarios) known += (known.empty() ? "" : ", ") + s.name;
  throw LookupError("scenario '" + name + "' is not in the surface (available: " + known + ")", {});
}

template <typename T>
std::vector<double> neighbours(const std::vector<T>& sorted, double value) {
  std::vector<double> out;
  auto hi = std::upper_bound(sorted.begin(), sorted.end(), value,
                             [](double v, const T& e) { return v < static_cast<double>(e); });
  if (hi != sorted.begin()) out.push_back(static_cast<double>(*std::prev(hi)));
  if (hi != sorted.end()) out.push_back(static_cast<double>(*hi));
  return out;
}

}  // namespace

Decision select(double confidence, double threshold) {
  check_threshold(threshold);
  return {confidence > threshold};
}

double utility(Decision decision, bool correct, const Scenario& scenario) {
  if (!decision.answered) return 0.0;
  return correct ? 1.0 : scenario.incorrect_reward;
}

SurfaceCell aggregate_cell(std::span<const AnswerRecord> records, double threshold,
                           const Scenario& scenario) {
  check_threshold(threshold);
  if (records.empty()) throw ArgumentError("cannot aggregate an empty record set");
  std::unordered_set<std::string_view> seen;
  std::size_t answered = 0;
  std::size_t correct = 0;
  for (const auto& r : records) {
    if (r.budget != records.front().budget) {
      throw ArgumentError("records span several budgets (" + std::to_string(records.front().budget) +
                          ", " + std::to_string(r.budget) + ")");
    }
    if (!seen.insert(r.question_id).second) {
      throw ArgumentError("duplicate record for question '" + r.question_id + "'");
    }
    if (select(r.confidence, threshold).answered) {
      ++answered;
      if (r.correct) ++correct;
    }
  }
  return make_cell(records.front().budget, threshold, scenario, records.size(), answered, correct);
}

Surface build_surface(std::span<const AnswerRecord> records, std::span<const int> budgets,
                      std::span<const double> thresholds, std::span<const Scenario> scenarios) {
  if (thresholds.empty()) throw ArgumentError("threshold list is empty");
  if (scenarios.empty()) throw ArgumentError("scenario list is empty");
  if (records.empty()) throw ArgumentError("no records to aggregate");
  for (double t : thresholds) check_threshold(t);

  Surface s;
  s.thresholds.assign(thresholds.begin(), thresholds.end());
  s.scenarios.assign(scenarios.begin(), scenarios.end());
  if (budgets.empty()) {
    for (const auto& r : records) s.budgets.push_back(r.budget);
    std::sort(s.budgets.begin(), s.budgets.end());
    s.budgets.erase(std::unique(s.budgets.begin(), s.budgets.end()), s.budgets.end());
  } else {
    s.budgets.assign(budgets.begin(), budgets.end());
    for (std::size_t i = 1; i < s.budgets.size(); ++i) {
      if (s.budgets[i] <= s.budgets[i - 1]) throw ArgumentError("budgets must be strictly ascending");
    }
  }

  std::unordered_map<int, std::size_t> budget_idx;
  for (std::size_t i = 0; i < s.budgets.size(); ++i) budget_idx.emplace(s.budgets[i], i);

  std::unordered_map<std::string_view, std::size_t> question_idx;
  std::vector<std::string_view> question_ids;
  question_idx.reserve(records.size() / std::max<std::size_t>(1, s.budgets.size()) + 1);
  for (const auto& r : records) {
    if (question_idx.emplace(r.question_id, question_ids.size()).second) {
      question_ids.push_back(r.question_id);
    }
  }

  const std::size_t nq = question_ids.size();
  const std::size_t nb = s.budgets.size();
  // Grid, question-major within each budget row.
  std::vector<double> confidence(nq * nb, 0.0);
  std::vector<std::uint8_t> state(nq * nb, 0);  // bit 0 present, bit 1 correct
  for (const auto& r : records) {
    const auto b = budget_idx.find(r.budget);
    if (b == budget_idx.end()) continue;
    const std::size_t at = b->second * nq + question_idx.at(r.question_id);
    if (state[at] & 1) {
      throw ArgumentError("duplicate record for question '" + r.question_id + "' at budget " +
                          std::to_string(r.budget));
    }
    state[at] = static_cast<std::uint8_t>(1 | (r.correct ? 2 : 0));
    confidence[at] = r.confidence;
  }

  std::vector<std::pair<std::string, int>> missing;
  for (std::size_t bi = 0; bi < nb; ++bi) {
    for (std::size_t qi = 0; qi < nq; ++qi) {
      if (!(state[bi * nq + qi] & 1)) missing.emplace_back(std::string(question_ids[qi]), s.budgets[bi]);
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << missing.size() << " (question, budget) pairs are missing:";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 20); ++i) {
      msg << " (" << missing[i].first << ", " << missing[i].second << ")";
    }
    if (missing.size() > 20) msg << " ...";
    throw CompletenessError(msg.str(), std::move(missing));
  }

  s.cells.reserve(nb * thresholds.size() * scenarios.size());
  for (std::size_t bi = 0; bi < nb; ++bi) {
    const double* conf = confidence.data() + bi * nq;
    const std::uint8_t* st = state.data() + bi * nq;
    for (const double t : s.thresholds) {
      std::size_t answered = 0;
      std::size_t correct = 0;
      for (std::size_t qi = 0; qi < nq; ++qi) {
        if (conf[qi] > t) {
          ++answered;
          correct += (st[qi] >> 1) & 1;
        }
      }
      for (const auto& sc : s.scenarios) {
        s.cells.push_back(make_cell(s.budgets[bi], t, sc, nq, answered, correct));
      }
    }
  }
  return s;
}

OptimalThreshold optimal_threshold(std::span<const AnswerRecord> records,
                                   const Scenario& scenario) {
  if (records.empty()) throw ArgumentError("optimal threshold of an empty record set");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].confidence > records[b].confidence;
  });

  const auto n = static_cast<double>(records.size());
  auto value = [&](std::size_t correct, std::size_t wrong) {
    return (static_cast<double>(correct) + scenario.incorrect_reward * static_cast<double>(wrong)) /
           n;
  };

  // Walk thresholds from high to low: at candidate t the answered set is
  // every record with confidence > t, i.e. a prefix of `order`.
  struct Candidate {
    double threshold;
    std::size_t correct, wrong;
  };
  std::vector<Candidate> candidates;
  std::size_t correct = 0;
  std::size_t wrong = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double c = records[order[i]].confidence;
    if (c <= 0.0) break;
    if (c < 1.0) candidates.push_back({c, correct, wrong});
    for (; i < order.size() && records[order[i]].confidence == c; ++i) {
      (records[order[i]].correct ? correct : wrong) += 1;
    }
  }
  candidates.push_back({0.0, correct, wrong});

  // Candidates run from high to low threshold; pick the last maximum so ties
  // resolve to the smallest threshold.
  OptimalThreshold best{1.0, -std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& cand : candidates) {
    const double u = value(cand.correct, cand.wrong);
    if (u >= best.utility) {
      best = {cand.threshold, u, static_cast<double>(cand.correct + cand.wrong) / n};
    }
  }
  return best;
}

std::vector<SurfaceCell> slice_at_threshold(const Surface& surface, double threshold,
                                            const std::string& scenario) {
  const std::size_t si = scenario_index(surface, scenario);
  std::size_t ti = surface.thresholds.size();
  for (std::size_t i = 0; i < surface.thresholds.size(); ++i) {
    if (std::abs(surface.thresholds[i] - threshold) <= 1e-12) ti = i;
  }
  if (ti == surface.thresholds.size()) {
    std::vector<double> sorted = surface.thresholds;
    std::sort(sorted.begin(), sorted.end());
    auto near = neighbours(sorted, threshold);
    std::ostringstream msg;
    msg << "threshold " << threshold << " is not in the grid; nearest available: "
        << format_values(near);
    throw LookupError(msg.str(), std::move(near));
  }
  std::vector<SurfaceCell> out;
  for (std::size_t bi = 0; bi < surface.budgets.size(); ++bi) out.push_back(surface.at(bi, ti, si));
  return out;
}

std::vector<SurfaceCell> slice_at_budget(const Surface& surface, int budget,
                                         const std::string& scenario) {
  const std::size_t si = scenario_index(surface, scenario);
  const auto it = std::find(surface.budgets.begin(), surface.budgets.end(), budget);
  if (it == surface.budgets.end()) {
    auto near = neighbours(surface.budgets, static_cast<double>(budget));
    throw LookupError("budget " + std::to_string(budget) +
                          " is not in the grid; nearest available: " + format_values(near),
                      std::move(near));
  }
  const auto bi = static_cast<std::size_t>(it - surface.budgets.begin());
  std::vector<std::size_t> order(surface.thresholds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return surface.thresholds[a] < surface.thresholds[b];
  });
  std::vector<SurfaceCell> out;
  for (std::size_t ti : order) out.push_back(surface.at(bi, ti, si));
  return out;
}

}  // namespace abstain
