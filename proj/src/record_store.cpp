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

#include "abstain/record_store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <sstream>

#include "abstain/digest.hpp"
#include "abstain/errors.hpp"
#include "json.hpp"

namespace abstain {
namespace {

using ojson = nlohmann::ordered_json;

ojson record_json(const AnswerRecord& r) {
  ojson j;
  j["qid"] = r.question_id;
  j["budget"] = r.budget;
  if (r.answer) {
    j["answer"] = *r.answer;
  } else {
    j["answer"] = nullptr;
  }
  if (std::isfinite(r.logprob_sum)) {
    j["logprob_sum"] = r.logprob_sum;
  } else {
    j["logprob_sum"] = nullptr;
  }
  j["confidence"] = r.confidence;
  j["correct"] = r.correct;
  j["parse_fail"] = r.parse_fail();
  j["interventions"] = r.interventions;
  j["trace_tokens"] = r.trace_tokens;
  return j;
}

template <typename T>
T field(const ojson& j, const char* name, std::size_t line) {
  const auto it = j.find(name);
  if (it == j.end()) {
    throw ParseError(std::string("record is missing field '") + name + "'", line);
  }
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("record field '") + name + "' has the wrong type", line);
  }
}

}  // namespace

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string record_to_line(const AnswerRecord& record, const std::string& created_at) {
  ojson j = record_json(record);
  j["created_at"] = created_at;
  return j.dump();
}

AnswerRecord record_from_line(std::string_view line, std::size_t line_number) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), line_number);
  }
  if (!j.is_object()) throw ParseError("record is not a JSON object", line_number);

  AnswerRecord r;
  r.question_id = field<std::string>(j, "qid", line_number);
  r.budget = field<int>(j, "budget", line_number);
  if (r.budget < 1) throw ParseError("record budget must be positive", line_number);
  const ojson& answer = j.contains("answer") ? j["answer"] : ojson();
  if (!j.contains("answer")) throw ParseError("record is missing field 'answer'", line_number);
  if (!answer.is_null()) {
    if (!answer.is_string()) throw ParseError("record field 'answer' must be a string", line_number);
    r.answer = answer.get<std::string>();
  }
  if (!j.contains("logprob_sum")) {
    throw ParseError("record is missing field 'logprob_sum'", line_number);
  }
  const ojson& lp = j["logprob_sum"];
  r.logprob_sum = lp.is_null() ? -std::numeric_limits<double>::infinity()
                               : field<double>(j, "logprob_sum", line_number);
  r.confidence = field<double>(j, "confidence", line_number);
  r.correct = field<bool>(j, "correct", line_number);
  const bool parse_fail = field<bool>(j, "parse_fail", line_number);
  r.interventions = field<int>(j, "interventions", line_number);
  r.trace_tokens = field<int>(j, "trace_tokens", line_number);
  field<std::string>(j, "created_at", line_number);

  if (parse_fail != r.parse_fail()) {
    throw ParseError("record parse_fail disagrees with its answer", line_number);
  }
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
    throw ParseError("record confidence outside [0, 1]", line_number);
  }
  if (r.parse_fail() && r.correct) {
    throw ParseError("PARSE_FAIL record cannot be correct", line_number);
  }
  return r;
}

std::string trace_to_line(const ReasoningTrace& trace) {
  ojson j;
  j["qid"] = trace.question_id;
  j["budget"] = trace.budget;
  j["forced_at_budget"] = trace.forced_at_budget;
  j["interventions"] = trace.interventions;
  ojson tokens = ojson::array();
  for (const auto& t : trace.tokens) tokens.push_back(ojson::array({t.text, t.logprob}));
  j["tokens"] = std::move(tokens);
  return j.dump();
}

RecordFileContents read_record_file(const std::filesystem::path& path,
                                    bool tolerate_partial_tail) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open records file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();

  RecordFileContents out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < data.size()) {
    ++line_no;
    const std::size_t nl = data.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::size_t end = complete ? nl : data.size();
    const std::string_view line(data.data() + pos, end - pos);
    const bool blank = line.find_first_not_of(" \t\r") == std::string_view::npos;
    if (!blank) {
      try {
        out.records.push_back(record_from_line(line, line_no));
      } catch (const ParseError&) {
        if (complete || !tolerate_partial_tail) throw;
        out.partial_tail = true;
        break;
      }
    }
    pos = complete ? nl + 1 : data.size();
    out.valid_bytes = pos;
  }
  return out;
}

std::vector<AnswerRecord> load_records(const std::filesystem::path& path) {
  auto contents = read_record_file(path, false);
  std::set<std::pair<std::string, int>> seen;
  for (const auto& r : contents.records) {
    if (!seen.emplace(r.question_id, r.budget).second) {
      throw ValidationError("duplicate record for question '" + r.question_id + "' at budget " +
                            std::to_string(r.budget) + " in '" + path.string() + "'");
    }
  }
  return std::move(contents.records);
}

std::string records_digest(std::span<const AnswerRecord> records) {
  std::vector<const AnswerRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const AnswerRecord* a, const AnswerRecord* b) {
    if (a->question_id != b->question_id) return a->question_id < b->question_id;
    return a->budget < b->budget;
  });
  std::string canonical;
  for (const AnswerRecord* r : sorted) {
    canonical += record_json(*r).dump();
    canonical += '\n';
  }
  return sha256_hex(canonical);
}

JsonlRecordFile::JsonlRecordFile(std::filesystem::path path, bool resume, Clock clock,
                                 std::optional<std::filesystem::path> traces)
    : path_(std::move(path)), clock_(std::move(clock)) {
  std::error_code ec;
  const bool exists = std::filesystem::exists(path_, ec);
  bool needs_newline = false;
  if (exists && std::filesystem::file_size(path_, ec) > 0) {
    if (!resume) {
      throw ValidationError("records: file '" + path_.string() +
                            "' already has records; pass --resume to continue it");
    }
    auto contents = read_record_file(path_, true);
    for (const auto& r : contents.records) {
      if (!keys_.emplace(r.question_id, r.budget).second) {
        throw ValidationError("duplicate record for question '" + r.question_id +
                              "' at budget " + std::to_string(r.budget) + " in '" +
                              path_.string() + "'");
      }
    }
    existing_ = contents.records.size();
    const auto size = std::filesystem::file_size(path_);
    if (contents.partial_tail) {
      std::filesystem::resize_file(path_, contents.valid_bytes);
    } else if (contents.valid_bytes == size && size > 0) {
      std::ifstream in(path_, std::ios::binary);
      in.seekg(-1, std::ios::end);
      needs_newline = in.get() != '\n';
    }
  }

  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw IoError("cannot open records file '" + path_.string() + "' for writing");
  if (needs_newline) out_ << '\n';
  if (traces) {
    traces_.open(*traces, std::ios::binary | (resume ? std::ios::app : std::ios::trunc));
    if (!traces_) throw IoError("cannot open traces file '" + traces->string() + "'");
  }
  writer_ = std::thread([this] { writer_loop(); });
}

JsonlRecordFile::~JsonlRecordFile() {
  try {
    close();
  } catch (...) {
  }
}

bool JsonlRecordFile::contains(const std::string& question_id, int budget) const {
  std::lock_guard lock(keys_mu_);
  return keys_.count({question_id, budget}) > 0;
}

void JsonlRecordFile::write(const AnswerRecord& record) {
  {
    std::lock_guard lock(keys_mu_);
    if (!keys_.emplace(record.question_id, record.budget).second) return;
  }
  enqueue(false, record_to_line(record, clock_()));
}

void JsonlRecordFile::write_trace(const ReasoningTrace& trace) {
  if (traces_.is_open()) enqueue(true, trace_to_line(trace));
}

void JsonlRecordFile::enqueue(bool is_trace, std::string line) {
  {
    std::lock_guard lock(queue_mu_);
    if (closing_) throw IoError("records file '" + path_.string() + "' is closed");
    queue_.emplace_back(is_trace, std::move(line));
  }
  queue_cv_.notify_one();
}

void JsonlRecordFile::writer_loop() {
  std::unique_lock lock(queue_mu_);
  for (;;) {
    queue_cv_.wait(lock, [this] { return closing_ || !queue_.empty(); });
    if (queue_.empty() && closing_) break;
    auto batch = std::move(queue_);
    queue_.clear();
    lock.unlock();
    for (auto& [is_trace, line] : batch) {
      std::ofstream& os = is_trace ? traces_ : out_;
      os << line << '\n';
    }
    out_.flush();
    if (traces_.is_open()) traces_.flush();
    lock.lock();
  }
}

void JsonlRecordFile::close() {
  {
    std::lock_guard lock(queue_mu_);
    if (closing_ && !writer_.joinable()) return;
    closing_ = true;
  }
  queue_cv_.notify_one();
  if (writer_.joinable()) writer_.join();
  out_.flush();
  if (traces_.is_open()) traces_.flush();
  if (!out_) throw IoError("writing records file '" + path_.string() + "' failed");
}

}  // namespace abstain
