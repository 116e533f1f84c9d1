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

#include "abstain/budget_forcer.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "abstain/grader.hpp"

namespace abstain {
namespace {

struct Thinking {
  std::vector<TokenEvent> tokens;
  std::vector<int> interventions;
  bool forced_at_budget = true;
};

Thinking think(Backend& backend, const std::string& prompt, int budget, const ForcingConfig& cfg) {
  Thinking out;
  out.tokens.reserve(static_cast<std::size_t>(budget));
  std::string context = prompt;
  int charged = 0;
  while (charged < budget) {
    CompletionRequest req;
    req.context = context;
    req.max_tokens = budget - charged;
    req.stop = {cfg.delimiter};
    req.prompt_chars = prompt.size();
    CompletionResult res = backend.complete(req);

    const auto requested = static_cast<std::size_t>(budget - charged);
    bool ended = res.finish != FinishReason::kLength;
    for (std::size_t j = 0; j < res.tokens.size(); ++j) {
      if (res.tokens[j].text.find(cfg.delimiter) != std::string::npos) {
        res.tokens.resize(j);
        ended = true;
        break;
      }
    }
    if (res.tokens.size() > requested) {
      res.tokens.resize(requested);
      ended = false;
    } else if (!ended && res.tokens.size() < requested) {
      // Early "length" (e.g. the server hit its context limit): the model
      // cannot continue on its own, so it is forced onward like an EOS.
      ended = true;
    }

    for (auto& t : res.tokens) {
      t.index = static_cast<std::size_t>(charged++);
      context += t.text;
      out.tokens.push_back(std::move(t));
    }
    if (charged >= budget) {
      out.forced_at_budget = !ended;
      break;
    }

    out.interventions.push_back(charged);
    const int slots = std::min(cfg.wait_token_cost, budget - charged);
    for (int s = 0; s < slots; ++s) {
      out.tokens.push_back({s == 0 ? cfg.wait_text : std::string(), 0.0,
                            static_cast<std::size_t>(charged++)});
    }
    context += cfg.wait_text;
  }
  return out;
}

AnswerRecord answer_phase(Backend& backend, const Question& q, const std::string& prompt,
                          const std::string& thinking_text, int budget, int interventions,
                          const ForcingConfig& cfg) {
  CompletionRequest req;
  req.context = prompt + thinking_text + cfg.delimiter + cfg.answer_cue;
  req.max_tokens = cfg.answer_max_tokens;
  req.prompt_chars = prompt.size();
  const CompletionResult res = backend.complete(req);

  AnswerRecord r;
  r.question_id = q.id;
  r.budget = budget;
  r.interventions = interventions;
  r.trace_tokens = budget;
  AnswerSpan span = extract_answer_span(res.tokens, q.format);
  if (!span.answer || span.tokens.empty()) {
    r.logprob_sum = -std::numeric_limits<double>::infinity();
    r.confidence = 0.0;
    r.correct = false;
    return r;
  }
  const Confidence c = confidence_of(span.tokens);
  r.correct = grade(span.answer, q.gold);
  r.answer = std::move(span.answer);
  r.answer_tokens = std::move(span.tokens);
  r.logprob_sum = c.logprob_sum;
  r.confidence = c.probability;
  return r;
}

std::string context_label(const Question& q, int budget) {
  return "question '" + q.id + "' at budget " + std::to_string(budget);
}

void check_budgets(std::span<const int> budgets) {
  if (budgets.empty()) throw ArgumentError("budget list is empty");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1) throw ArgumentError("budgets must be >= 1");
    if (i > 0 && budgets[i] <= budgets[i - 1]) {
      throw ArgumentError("budgets must be strictly ascending (" + std::to_string(budgets[i - 1]) +
                          " then " + std::to_string(budgets[i]) + ")");
    }
  }
}

}  // namespace

void ForcingConfig::validate() const {
  if (delimiter.empty()) {
    throw ValidationError("forcing.delimiter is required (the model's end-of-thinking string)");
  }
  if (wait_text.empty()) throw ValidationError("forcing.wait_text must be nonempty");
  if (answer_max_tokens < 1) throw ValidationError("forcing.answer_max_tokens must be >= 1");
  if (wait_token_cost < 1) throw ValidationError("forcing.wait_token_cost must be >= 1");
  if (prompt_template.find("{question}") == std::string::npos) {
    throw ValidationError("forcing.prompt_template must contain {question}");
  }
}

std::string ForcingConfig::render_prompt(const Question& q) const {
  std::string out = prompt_template;
  const std::string key = "{question}";
  for (auto at = out.find(key); at != std::string::npos; at = out.find(key, at + q.prompt.size())) {
    out.replace(at, key.size(), q.prompt);
  }
  return out;
}

std::pair<ReasoningTrace, AnswerRecord> generate_with_budget(Backend& backend,
                                                             const Question& question, int budget,
                                                             const ForcingConfig& cfg) {
  cfg.validate();
  if (budget < 1) throw ArgumentError("budget must be >= 1");
  try {
    const std::string prompt = cfg.render_prompt(question);
    Thinking th = think(backend, prompt, budget, cfg);
    std::string text;
    for (const auto& t : th.tokens) text += t.text;
    const int n_interventions = static_cast<int>(th.interventions.size());
    AnswerRecord record = answer_phase(backend, question, prompt, text, budget, n_interventions, cfg);

    ReasoningTrace trace;
    trace.question_id = question.id;
    trace.budget = budget;
    trace.tokens = std::move(th.tokens);
    trace.interventions = std::move(th.interventions);
    trace.forced_at_budget = th.forced_at_budget;
    return {std::move(trace), std::move(record)};
  } catch (const Error& e) {
    throw e.with_context(context_label(question, budget));
  }
}

std::vector<AnswerRecord> sweep_budgets(Backend& backend, const Question& question,
                                        std::span<const int> budgets, const ForcingConfig& cfg) {
  return sweep_budgets(backend, question, budgets, cfg, {}, nullptr);
}

std::vector<AnswerRecord> sweep_budgets(Backend& backend, const Question& question,
                                        std::span<const int> budgets, const ForcingConfig& cfg,
                                        const std::function<void(const AnswerRecord&)>& on_record,
                                        ReasoningTrace* master) {
  cfg.validate();
  check_budgets(budgets);
  const int top = budgets.back();
  const std::string prompt = cfg.render_prompt(question);

  Thinking th;
  try {
    th = think(backend, prompt, top, cfg);
  } catch (const Error& e) {
    throw e.with_context(context_label(question, top));
  }

  std::vector<AnswerRecord> out;
  out.reserve(budgets.size());
  std::string prefix;
  std::size_t consumed = 0;
  for (const int b : budgets) {
    for (; consumed < static_cast<std::size_t>(b); ++consumed) prefix += th.tokens[consumed].text;
    const auto n_interventions = static_cast<int>(
        std::count_if(th.interventions.begin(), th.interventions.end(),
                      [b](int p) { return p < b; }));
    try {
      out.push_back(answer_phase(backend, question, prompt, prefix, b, n_interventions, cfg));
    } catch (const Error& e) {
      throw e.with_context(context_label(question, b));
    }
    if (on_record) on_record(out.back());
  }

  if (master != nullptr) {
    master->question_id = question.id;
    master->budget = top;
    master->tokens = std::move(th.tokens);
    master->interventions = std::move(th.interventions);
    master->forced_at_budget = th.forced_at_budget;
  }
  return out;
}

RunSummary run_dataset(Backend& backend, std::span<const Question> questions,
                       std::span<const int> budgets, const ForcingConfig& cfg,
                       const RunOptions& options, RecordSink& sink) {
  cfg.validate();
  check_budgets(budgets);
  if (options.concurrency < 1) throw ArgumentError("concurrency must be >= 1");

  RunSummary summary;
  summary.questions = questions.size();
  std::mutex mu;
  std::vector<std::pair<std::size_t, QuestionFailure>> failures;
  std::size_t attempted = 0;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t idx = next.fetch_add(1); idx < questions.size(); idx = next.fetch_add(1)) {
      const Question& q = questions[idx];
      std::vector<int> missing;
      for (const int b : budgets) {
        if (!sink.contains(q.id, b)) missing.push_back(b);
      }
      {
        std::lock_guard<std::mutex> lock(mu);
        summary.records_skipped += budgets.size() - missing.size();
        if (missing.empty()) {
          ++summary.completed;
          continue;
        }
        ++attempted;
      }

      auto account = [&](const AnswerRecord& r) {
        sink.write(r);
        std::lock_guard<std::mutex> lock(mu);
        ++summary.records_written;
        summary.answer_tokens += r.answer_tokens.size();
        if (r.parse_fail()) ++summary.parse_failures;
      };
      try {
        if (options.sweep) {
          ReasoningTrace master;
          sweep_budgets(backend, q, missing, cfg, account, &master);
          sink.write_trace(master);
          std::lock_guard<std::mutex> lock(mu);
          summary.thinking_tokens += static_cast<std::uint64_t>(master.budget);
        } else {
          for (const int b : missing) {
            auto [trace, record] = generate_with_budget(backend, q, b, cfg);
            account(record);
            sink.write_trace(trace);
            std::lock_guard<std::mutex> lock(mu);
            summary.thinking_tokens += static_cast<std::uint64_t>(b);
          }
        }
        std::lock_guard<std::mutex> lock(mu);
        ++summary.completed;
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(mu);
        failures.push_back({idx, {q.id, e.code(), e.what()}});
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        failures.push_back({idx, {q.id, ErrorCode::kRunFailed, e.what()}});
      }
    }
  };

  const auto n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(options.concurrency), questions.size());
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(work);
  }

  std::sort(failures.begin(), failures.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [idx, f] : failures) summary.failures.push_back(std::move(f));

  if (attempted > 0 && summary.failures.size() == attempted) {
    // Most frequent failure kind; the first question's kind breaks ties.
    std::map<ErrorCode, std::size_t> counts;
    for (const auto& f : summary.failures) ++counts[f.code];
    ErrorCode dominant = summary.failures.front().code;
    for (const auto& [code, n] : counts) {
      if (n > counts[dominant]) dominant = code;
    }
    throw RunFailedError(dominant, "all " + std::to_string(attempted) +
                                       " questions failed; first failure: " +
                                       summary.failures.front().message);
  }
  return summary;
}

}  // namespace abstain
