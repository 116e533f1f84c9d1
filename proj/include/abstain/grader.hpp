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

#ifndef ABSTAIN_GRADER_HPP_
#define ABSTAIN_GRADER_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abstain/types.hpp"

namespace abstain {

struct AnswerSpan {
  std::optional<std::string> answer;  // nullopt: PARSE_FAIL
  std::vector<TokenEvent> tokens;     // tokens overlapping the matched characters
};

// Finds the last answer in the concatenated token text and returns the
// minimal run of tokens whose characters overlap the match. Tokenization is
// not assumed: "042" may arrive as one, two or three tokens.
AnswerSpan extract_answer_span(std::span<const TokenEvent> answer_tokens, AnswerFormat format);

struct Confidence {
  double logprob_sum = 0.0;
  double probability = 1.0;  // exp(logprob_sum)
};

// Throws ArgumentError on an empty span.
Confidence confidence_of(std::span<const TokenEvent> span);

inline bool grade(const std::optional<std::string>& answer, const std::string& gold) {
  return answer.has_value() && *answer == gold;
}

}  // namespace abstain

#endif  // ABSTAIN_GRADER_HPP_
