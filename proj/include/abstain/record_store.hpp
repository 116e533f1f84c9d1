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

// Append-only record files: one JSON object per line and per
// (question, budget), with fields
//   qid, budget, answer, logprob_sum, confidence, correct, parse_fail,
//   interventions, trace_tokens, created_at
// `answer` and `logprob_sum` are null for PARSE_FAIL records.

#ifndef ABSTAIN_RECORD_STORE_HPP_
#define ABSTAIN_RECORD_STORE_HPP_

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "abstain/budget_forcer.hpp"
#include "abstain/types.hpp"

namespace abstain {

std::string utc_now_iso8601();

std::string record_to_line(const AnswerRecord& record, const std::string& created_at);
AnswerRecord record_from_line(std::string_view line, std::size_t line_number);
std::string trace_to_line(const ReasoningTrace& trace);

struct RecordFileContents {
  std::vector<AnswerRecord> records;
  std::uintmax_t valid_bytes = 0;  // prefix ending at the last complete record
  bool partial_tail = false;       // an interrupted, unparseable last line
};

// With `tolerate_partial_tail`, a final line lacking its newline that does
// not parse is reported instead of raising ParseError.
RecordFileContents read_record_file(const std::filesystem::path& path,
                                    bool tolerate_partial_tail);
// Strict load; rejects duplicate (question, budget) pairs.
std::vector<AnswerRecord> load_records(const std::filesystem::path& path);

// SHA-256 over the records sorted by (question, budget) with created_at
// excluded, so it identifies record content regardless of write order.
std::string records_digest(std::span<const AnswerRecord> records);

// Record sink backed by a JSONL file. One writer thread owns the file;
// producers enqueue lines from any thread. With `resume`, existing records
// are loaded (an interrupted trailing line is cut off) and new lines are
// appended; without it the file must be absent or empty.
class JsonlRecordFile final : public RecordSink {
 public:
  using Clock = std::function<std::string()>;

  JsonlRecordFile(std::filesystem::path path, bool resume, Clock clock = utc_now_iso8601,
                  std::optional<std::filesystem::path> traces = std::nullopt);
  ~JsonlRecordFile() override;

  JsonlRecordFile(const JsonlRecordFile&) = delete;
  JsonlRecordFile& operator=(const JsonlRecordFile&) = delete;

  bool contains(const std::string& question_id, int budget) const override;
  void write(const AnswerRecord& record) override;
  void write_trace(const ReasoningTrace& trace) override;

  // Drains the queue, flushes and stops the writer. Idempotent.
  void close();

  std::size_t existing() const { return existing_; }

 private:
  void writer_loop();
  void enqueue(bool is_trace, std::string line);

  std::filesystem::path path_;
  Clock clock_;
  std::ofstream out_;
  std::ofstream traces_;
  std::size_t existing_ = 0;

  mutable std::mutex keys_mu_;
  std::set<std::pair<std::string, int>> keys_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<std::pair<bool, std::string>> queue_;
  bool closing_ = false;
  std::thread writer_;
};

}  // namespace abstain

#endif  // ABSTAIN_RECORD_STORE_HPP_
