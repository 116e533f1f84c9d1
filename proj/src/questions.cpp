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

#include "abstain/questions.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "abstain/errors.hpp"
#include "json.hpp"

namespace abstain {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_word(char c) { return is_digit(c) || is_alpha(c) || c == '_'; }
bool is_separator(char c) { return c == '.' || c == ','; }

std::optional<AnswerMatch> find_integer3(std::string_view text) {
  std::optional<AnswerMatch> last;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_digit(text[j])) ++j;
    const std::size_t len = j - i;
    bool standalone = len >= 1 && len <= 3;
    if (i > 0 && is_word(text[i - 1])) standalone = false;
    if (i >= 2 && is_separator(text[i - 1]) && is_digit(text[i - 2])) standalone = false;
    if (j < n && is_word(text[j])) standalone = false;
    if (j + 1 < n && is_separator(text[j]) && is_digit(text[j + 1])) standalone = false;
    if (standalone) {
      std::string digits(text.substr(i, len));
      last = AnswerMatch{i, j, std::string(3 - len, '0') + digits};
    }
    i = j;
  }
  return last;
}

std::optional<AnswerMatch> find_mc4(std::string_view text) {
  const std::size_t n = text.size();
  for (std::size_t k = n; k-- > 0;) {
    const char c = text[k];
    const char upper = (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
    if (upper < 'A' || upper > 'D') continue;
    if (k > 0 && is_word(text[k - 1])) continue;
    if (k + 1 < n && is_word(text[k + 1])) continue;
    return AnswerMatch{k, k + 1, std::string(1, upper)};
  }
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Stricter than find_answer: the whole gold string must be the answer.
std::optional<std::string> normalize_gold(std::string_view raw, AnswerFormat format) {
  std::string_view s = trim(raw);
  if (format == AnswerFormat::kInteger3) {
    if (s.empty() || s.size() > 3) return std::nullopt;
    for (char c : s) {
      if (!is_digit(c)) return std::nullopt;
    }
    return std::string(3 - s.size(), '0') + std::string(s);
  }
  if (s.size() == 3 && s.front() == '(' && s.back() == ')') s = s.substr(1, 1);
  if (s.size() != 1) return std::nullopt;
  const auto m = find_mc4(s);
  if (!m) return std::nullopt;
  return m->normalized;
}

std::string id_of(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  return {};
}

}  // namespace

std::optional<AnswerMatch> find_answer(std::string_view text, AnswerFormat format) {
  return format == AnswerFormat::kInteger3 ? find_integer3(text) : find_mc4(text);
}

std::optional<std::string> normalize_answer(std::string_view raw, AnswerFormat format) {
  auto m = find_answer(raw, format);
  if (!m) return std::nullopt;
  return std::move(m->normalized);
}

Question parse_question_line(std::string_view line, AnswerFormat format_default,
                             std::size_t line_number) {
  const std::string where = "line " + std::to_string(line_number);
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(where + ": malformed question object: " + e.what(), line_number);
  }
  if (!obj.is_object()) throw ParseError(where + ": expected a JSON object", line_number);

  Question q;
  if (!obj.contains("id") || (q.id = id_of(obj["id"])).empty()) {
    throw ParseError(where + ": missing or empty string field 'id'", line_number);
  }
  if (!obj.contains("question") || !obj["question"].is_string()) {
    throw ParseError(where + ": question '" + q.id + "' lacks string field 'question'",
                     line_number);
  }
  q.prompt = obj["question"].get<std::string>();
  q.format = format_default;
  if (obj.contains("format") && !obj["format"].is_null()) {
    if (!obj["format"].is_string()) {
      throw ParseError(where + ": field 'format' must be a string", line_number);
    }
    try {
      q.format = parse_answer_format(obj["format"].get<std::string>());
    } catch (const ArgumentError& e) {
      throw ValidationError("question '" + q.id + "': " + e.what());
    }
  }
  if (obj.contains("source") && obj["source"].is_string()) {
    q.source = obj["source"].get<std::string>();
  }

  if (!obj.contains("answer")) {
    throw ParseError(where + ": question '" + q.id + "' lacks field 'answer'", line_number);
  }
  const auto& answer = obj["answer"];
  std::string raw;
  if (answer.is_string()) {
    raw = answer.get<std::string>();
  } else if (answer.is_number_unsigned() || answer.is_number_integer()) {
    raw = std::to_string(answer.get<long long>());
  } else {
    throw ValidationError("question '" + q.id + "': answer must be a string or integer");
  }
  auto gold = normalize_gold(raw, q.format);
  if (!gold) {
    throw ValidationError("question '" + q.id + "': answer '" + raw + "' is not a valid " +
                          std::string(to_string(q.format)) + " answer");
  }
  q.gold = std::move(*gold);
  return q;
}

std::vector<Question> parse_questions(std::string_view content, AnswerFormat format_default) {
  std::vector<Question> out;
  std::unordered_set<std::string> seen;
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const auto nl = content.find('\n', pos);
    const auto line = content.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    ++line_number;
    if (!trim(line).empty()) {
      Question q = parse_question_line(line, format_default, line_number);
      if (!seen.insert(q.id).second) {
        throw ValidationError("duplicate question id '" + q.id + "' (line " +
                              std::to_string(line_number) + ")");
      }
      out.push_back(std::move(q));
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::vector<Question> load_questions(const std::filesystem::path& path,
                                     AnswerFormat format_default) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open question file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_questions(buf.str(), format_default);
}

std::string serialize_questions(std::span<const Question> questions) {
  std::string out;
  for (const auto& q : questions) {
    nlohmann::ordered_json obj;
    obj["id"] = q.id;
    obj["question"] = q.prompt;
    obj["answer"] = q.gold;
    obj["format"] = std::string(to_string(q.format));
    if (!q.source.empty()) obj["source"] = q.source;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace abstain
