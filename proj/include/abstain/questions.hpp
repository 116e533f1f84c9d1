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

#ifndef ABSTAIN_QUESTIONS_HPP_
#define ABSTAIN_QUESTIONS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abstain/types.hpp"

namespace abstain {

// Location of an extracted answer inside the text it was found in.
struct AnswerMatch {
  std::size_t begin = 0;  // byte offsets, [begin, end)
  std::size_t end = 0;
  std::string normalized;
};

// Finds the last well-formed answer in `text`.
//
// integer3: the last standalone run of 1-3 decimal digits (not touching
// letters, other digits, or a decimal/thousands separator followed by a
// digit), zero-padded to three digits.
// mc4: the last standalone letter A-D, case-insensitive, upper-cased.
std::optional<AnswerMatch> find_answer(std::string_view text, AnswerFormat format);

// nullopt plays the role of PARSE_FAIL.
std::optional<std::string> normalize_answer(std::string_view raw, AnswerFormat format);

// Parses one question line. `line_number` is only used in error messages.
Question parse_question_line(std::string_view line, AnswerFormat format_default,
                             std::size_t line_number);

// Loads a line-delimited question file. Blank lines are skipped.
// Throws ParseError (with line number) for malformed lines and
// ValidationError (naming the id) for invariant violations, including
// duplicate ids.
std::vector<Question> load_questions(const std::filesystem::path& path,
                                     AnswerFormat format_default);
std::vector<Question> parse_questions(std::string_view content,
                                      AnswerFormat format_default);

std::string serialize_questions(std::span<const Question> questions);

}  // namespace abstain

#endif  // ABSTAIN_QUESTIONS_HPP_
