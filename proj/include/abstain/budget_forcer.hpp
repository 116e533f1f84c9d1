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

// Budget-forced decoding.
//
// The thinking phase is decoded with the end-of-thinking delimiter as a stop
// string. Whenever the model tries to end early (the delimiter, or an EOS),
// the attempt is discarded, the wait text is appended and charged, and
// decoding continues. Once exactly `budget` tokens are charged the delimiter
// and the answer cue are appended and the answer phase is decoded.
//
// Accounting: suppressed delimiters are never charged; each injected wait
// costs `wait_token_cost` trace slots (the first slot carries the text, the
// rest are empty), truncated at the budget when necessary.

#ifndef ABSTAIN_BUDGET_FORCER_HPP_
#define ABSTAIN_BUDGET_FORCER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abstain/backend.hpp"
#include "abstain/errors.hpp"
#include "abstain/types.hpp"

namespace abstain {

struct ForcingConfig {
  std::string delimiter;              // model specific, required
  std::string wait_text = "Wait";
  std::string answer_cue = "Final Answer:";
  int answer_max_tokens = 32;
  int wait_token_cost = 1;
  std::string prompt_template = "{question}";

  // Throws ValidationError naming the offending field.
  void validate() const;
  std::string render_prompt(const Question& q) const;
};

std::pair<ReasoningTrace, AnswerRecord> generate_with_budget(Backend& backend,
                                                             const Question& question, int budget,
                                                             const ForcingConfig& cfg);

// One master thinking trace at max(budgets), then one answer-phase decode per
// budget on the corresponding prefix. Equivalent to calling
// generate_with_budget per budget on any deterministic backend.
std::vector<AnswerRecord> sweep_budgets(Backend& backend, const Question& question,
                                        std::span<const int> budgets, const ForcingConfig& cfg);

// Same as above; `on_record` sees each record as soon as it is graded and the
// master trace is returned through `master` when non-null.
std::vector<AnswerRecord> sweep_budgets(Backend& backend, const Question& question,
                                        std::span<const int> budgets, const ForcingConfig& cfg,
                                        const std::function<void(const AnswerRecord&)>& on_record,
                                        ReasoningTrace* master);

// ---------------------------------------------------------------------------
// Dataset driver

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual bool contains(const std::string& question_id, int budget) const = 0;
  // Must be safe to call from several threads.
  virtual void write(const AnswerRecord& record) = 0;
  virtual void write_trace(const ReasoningTrace&) {}
};

struct RunOptions {
  int concurrency = 1;
  bool sweep = true;  // false: independent generation per budget
};

struct QuestionFailure {
  std::string question_id;
  ErrorCode code = ErrorCode::kRunFailed;
  std::string message;
};

struct RunSummary {
  std::size_t questions = 0;
  std::size_t completed = 0;  // questions with every budget present afterwards
  std::vector<QuestionFailure> failures;
  std::size_t records_written = 0;
  std::size_t records_skipped = 0;  // already present in the sink
  std::size_t parse_failures = 0;
  std::uint64_t thinking_tokens = 0;  // charged tokens generated this run
  std::uint64_t answer_tokens = 0;    // answer-span tokens graded this run
};

// Evaluates every (question, budget) pair missing from `sink`. Questions run
// concurrently up to options.concurrency; a failing question is recorded in
// the summary and skipped. Throws RunFailedError when every question that
// had work to do failed.
RunSummary run_dataset(Backend& backend, std::span<const Question> questions,
                       std::span<const int> budgets, const ForcingConfig& cfg,
                       const RunOptions& options, RecordSink& sink);

}  // namespace abstain

#endif  // ABSTAIN_BUDGET_FORCER_HPP_
