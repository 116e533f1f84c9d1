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

#include "abstain/types.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "abstain/errors.hpp"

namespace abstain {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kArgument: return "argument";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kHttp: return "http";
    case ErrorCode::kCapability: return "capability";
    case ErrorCode::kCompleteness: return "completeness";
    case ErrorCode::kLookup: return "lookup";
    case ErrorCode::kDegenerateFit: return "degenerate_fit";
    case ErrorCode::kRunFailed: return "run_failed";
  }
  return "unknown";
}

std::string_view to_string(AnswerFormat format) {
  switch (format) {
    case AnswerFormat::kInteger3: return "integer3";
    case AnswerFormat::kMc4: return "mc4";
  }
  return "unknown";
}

AnswerFormat parse_answer_format(std::string_view name) {
  if (name == "integer3") return AnswerFormat::kInteger3;
  if (name == "mc4") return AnswerFormat::kMc4;
  throw ArgumentError("unknown answer format '" + std::string(name) +
                      "' (expected integer3 or mc4)");
}

Scenario parse_scenario(std::string_view text) {
  if (text == "exam") return Scenario::exam();
  if (text == "jeopardy") return Scenario::jeopardy();
  if (text == "high_stakes") return Scenario::high_stakes();
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ArgumentError("unknown scenario '" + std::string(text) +
                        "' (expected exam, jeopardy, high_stakes or name=reward)");
  }
  const std::string_view value = text.substr(eq + 1);
  double reward = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), reward);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(reward)) {
    throw ArgumentError("scenario '" + std::string(text) + "' has a non-numeric reward");
  }
  return {std::string(text.substr(0, eq)), reward};
}

std::vector<Scenario> default_scenarios() {
  return {Scenario::exam(), Scenario::jeopardy(), Scenario::high_stakes()};
}

}  // namespace abstain
