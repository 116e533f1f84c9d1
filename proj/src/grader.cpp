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

#include "abstain/grader.hpp"

#include <cmath>

#include "abstain/errors.hpp"
#include "abstain/questions.hpp"

namespace abstain {

AnswerSpan extract_answer_span(std::span<const TokenEvent> answer_tokens, AnswerFormat format) {
  std::string text;
  for (const auto& t : answer_tokens) text += t.text;
  const auto match = find_answer(text, format);
  if (!match) return {};

  AnswerSpan span;
  span.answer = match->normalized;
  std::size_t begin = 0;
  for (const auto& t : answer_tokens) {
    const std::size_t end = begin + t.text.size();
    if (begin < match->end && end > match->begin) span.tokens.push_back(t);
    begin = end;
  }
  return span;
}

Confidence confidence_of(std::span<const TokenEvent> span) {
  if (span.empty()) throw ArgumentError("confidence of an empty answer span is undefined");
  double sum = 0.0;
  for (const auto& t : span) sum += t.logprob;
  return {sum, std::exp(sum)};
}

}  // namespace abstain
