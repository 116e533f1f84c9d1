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

// Domain types shared across the harness. All of them are plain values and
// immutable once built, so they can be shared between threads freely.

#ifndef ABSTAIN_TYPES_HPP_
#define ABSTAIN_TYPES_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace abstain {

enum class AnswerFormat {
  kInteger3,  // "000".."999"
  kMc4,       // "A".."D"
};

std::string_view to_string(AnswerFormat format);
// Accepts "integer3" / "mc4"; throws ArgumentError otherwise.
AnswerFormat parse_answer_format(std::string_view name);

struct Question {
  std::string id;
  std::string prompt;
  std::string gold;  // already normalized
  AnswerFormat format = AnswerFormat::kInteger3;
  std::string source;

  bool operator==(const Question&) const = default;
};

// One generated token. `logprob` is a natural log probability (<= 0) and
// `index` its 0-based position within its decoding phase.
struct TokenEvent {
  std::string text;
  double logprob = 0.0;
  std::size_t index = 0;

  bool operator==(const TokenEvent&) const = default;
};

// Thinking phase of one budget-forced generation.
struct ReasoningTrace {
  std::string question_id;
  int budget = 0;
  std::vector<TokenEvent> tokens;       // size() == budget
  std::vector<int> interventions;       // charged positions, each < budget
  bool forced_at_budget = true;

  bool operator==(const ReasoningTrace&) const = default;
};

// Graded outcome of one (question, budget) pair.
//
// A record whose `answer` is empty-optional is a PARSE_FAIL: no well-formed
// answer was found. Such records carry confidence 0, logprob_sum -inf and
// are never correct.
struct AnswerRecord {
  std::string question_id;
  int budget = 0;
  std::optional<std::string> answer;
  std::vector<TokenEvent> answer_tokens;
  double logprob_sum = 0.0;
  double confidence = 0.0;
  bool correct = false;
  int interventions = 0;
  int trace_tokens = 0;

  bool parse_fail() const { return !answer.has_value(); }
  bool operator==(const AnswerRecord&) const = default;
};

struct Scenario {
  std::string name;
  double incorrect_reward = 0.0;  // payoff of a wrong answer

  bool operator==(const Scenario&) const = default;

  static Scenario exam() { return {"exam", 0.0}; }
  static Scenario jeopardy() { return {"jeopardy", -1.0}; }
  static Scenario high_stakes() { return {"high_stakes", -20.0}; }
};

// "exam" | "jeopardy" | "high_stakes" | "<name>=<reward>".
Scenario parse_scenario(std::string_view text);
std::vector<Scenario> default_scenarios();

struct SurfaceCell {
  int budget = 0;
  double threshold = 0.0;
  Scenario scenario;
  std::size_t n_total = 0;
  std::size_t n_answered = 0;
  std::size_t n_correct = 0;  // correct among answered
  double coverage = 0.0;
  double answered_accuracy = 0.0;
  double mean_utility = 0.0;

  bool operator==(const SurfaceCell&) const = default;
};

}  // namespace abstain

#endif  // ABSTAIN_TYPES_HPP_
