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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>

#include "abstain/budget_forcer.hpp"
#include "abstain/errors.hpp"
#include "abstain/offline_backends.hpp"
#include "abstain/run_config.hpp"
#include "test_support.hpp"

namespace abstain {
namespace {

using testing::Gen;
using testing::MemorySink;

const std::string kDelim = "</think>";

ForcingConfig forcing() {
  ForcingConfig c;
  c.delimiter = kDelim;
  return c;
}

// Forwards to another backend, logging calls and optionally failing some.
class TapBackend final : public Backend {
 public:
  explicit TapBackend(Backend& inner) : inner_(inner) {}
  CompletionResult complete(const CompletionRequest& r) override {
    if (fail && fail(r)) throw TransportError("injected failure");
    CompletionResult res = inner_.complete(r);
    std::lock_guard lock(mu_);
    calls.push_back({r, res});
    return res;
  }
  std::string_view name() const override { return "tap"; }

  std::function<bool(const CompletionRequest&)> fail;
  std::vector<std::pair<CompletionRequest, CompletionResult>> calls;

 private:
  Backend& inner_;
  std::mutex mu_;
};

Question question(const std::string& id, const std::string& prompt, const std::string& gold = "042") {
  Question q;
  q.id = id;
  q.prompt = prompt;
  q.gold = gold;
  return q;
}

ScriptSegment filler(int n, const std::string& tag) {
  ScriptSegment s;
  for (int i = 0; i < n; ++i) s.tokens.push_back({" " + tag + std::to_string(i), -0.2, 0});
  return s;
}

ScriptedBackendSpec delimiter_at_50() {
  ScriptedBackendSpec spec;
  ScriptedQuestion q;
  q.prompt = "Q?";
  ScriptSegment a = filler(50, "a");
  a.tokens.push_back({kDelim, -0.1, 0});
  a.finish = FinishReason::kStopMatched;
  q.thinking = {a, filler(200, "b")};
  q.answers = {{0, {{" The answer is ", -0.3}, {"0", -0.01}, {"4", -0.02}, {"2", -0.01}}}};
  spec.questions.push_back(q);
  return spec;
}

TEST(GenerateWithBudget, SuppressesDelimiterAtFifty) {
  ScriptedBackend backend(delimiter_at_50());
  const auto [trace, record] = generate_with_budget(backend, question("q", "Q?"), 100, forcing());
  ASSERT_EQ(trace.tokens.size(), 100u);
  EXPECT_EQ(trace.interventions, std::vector<int>{50});
  EXPECT_EQ(trace.tokens[50].text, "Wait");
  EXPECT_TRUE(trace.forced_at_budget);
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    EXPECT_EQ(trace.tokens[i].index, i);
    EXPECT_EQ(trace.tokens[i].text.find(kDelim), std::string::npos);
  }
  EXPECT_EQ(record.interventions, 1);
  EXPECT_EQ(record.trace_tokens, 100);
}

TEST(GenerateWithBudget, NeverDelimitingIsForcedAtBudget) {
  SyntheticBackend backend(3, SyntheticProfile{});
  const auto [trace, record] =
      generate_with_budget(backend, question("q", "Think hard."), 500, forcing());
  EXPECT_EQ(trace.tokens.size(), 500u);
  EXPECT_TRUE(trace.interventions.empty());
  EXPECT_TRUE(trace.forced_at_budget);
  EXPECT_EQ(record.interventions, 0);
}

TEST(GenerateWithBudget, AnswerConfidenceFromDigitTokens) {
  ScriptedBackend backend(delimiter_at_50());
  const auto [trace, record] = generate_with_budget(backend, question("q", "Q?"), 60, forcing());
  EXPECT_EQ(record.answer, "042");
  EXPECT_NEAR(record.logprob_sum, -0.04, 1e-15);
  EXPECT_NEAR(record.confidence, 0.960789, 1e-6);
  EXPECT_NEAR(record.confidence, std::exp(record.logprob_sum), 1e-12);
  EXPECT_TRUE(record.correct);
  ASSERT_EQ(record.answer_tokens.size(), 3u);
}

TEST(GenerateWithBudget, AnswerContextCarriesDelimiterOnce) {
  ScriptedBackend inner(delimiter_at_50());
  TapBackend tap(inner);
  ForcingConfig cfg = forcing();
  const auto [trace, record] = generate_with_budget(tap, question("q", "Q?"), 80, cfg);
  const auto& answer_ctx = tap.calls.back().first.context;
  std::string thinking;
  for (const auto& t : trace.tokens) thinking += t.text;
  EXPECT_EQ(answer_ctx, "Q?" + thinking + kDelim + cfg.answer_cue);
  EXPECT_EQ(answer_ctx.find(kDelim), answer_ctx.rfind(kDelim));
  EXPECT_EQ(tap.calls.back().first.max_tokens, cfg.answer_max_tokens);
}

TEST(GenerateWithBudget, WaitCostChargesEmptySlots) {
  ScriptedBackend backend(delimiter_at_50());
  ForcingConfig cfg = forcing();
  cfg.wait_token_cost = 3;
  auto [trace, record] = generate_with_budget(backend, question("q", "Q?"), 60, cfg);
  ASSERT_EQ(trace.tokens.size(), 60u);
  EXPECT_EQ(trace.tokens[50].text, "Wait");
  EXPECT_EQ(trace.tokens[51].text, "");
  EXPECT_EQ(trace.tokens[52].text, "");
  EXPECT_EQ(trace.tokens[53].text, " b0");
  // Truncated at the budget.
  std::tie(trace, record) = generate_with_budget(backend, question("q", "Q?"), 52, cfg);
  ASSERT_EQ(trace.tokens.size(), 52u);
  EXPECT_EQ(trace.tokens[51].text, "");
}

TEST(GenerateWithBudget, EndOfTextIsSuppressedToo) {
  ScriptedBackendSpec spec;
  ScriptedQuestion q;
  q.prompt = "Q?";
  ScriptSegment a = filler(5, "a");
  a.finish = FinishReason::kEndOfText;
  q.thinking = {a, filler(20, "b")};
  q.answers = {{0, {{" 1", -0.1}}}};
  spec.questions.push_back(q);
  ScriptedBackend backend(spec);
  const auto [trace, record] = generate_with_budget(backend, question("q", "Q?", "001"), 10, forcing());
  EXPECT_EQ(trace.interventions, std::vector<int>{5});
  EXPECT_EQ(trace.tokens.size(), 10u);
}

TEST(GenerateWithBudget, ConfigValidation) {
  SyntheticBackend backend(3, SyntheticProfile{});
  ForcingConfig cfg;
  EXPECT_THROW(generate_with_budget(backend, question("q", "x"), 10, cfg), ValidationError);
  cfg = forcing();
  cfg.wait_text = "";
  EXPECT_THROW(generate_with_budget(backend, question("q", "x"), 10, cfg), ValidationError);
  cfg = forcing();
  cfg.answer_max_tokens = 0;
  EXPECT_THROW(generate_with_budget(backend, question("q", "x"), 10, cfg), ValidationError);
  cfg = forcing();
  cfg.prompt_template = "no placeholder";
  EXPECT_THROW(generate_with_budget(backend, question("q", "x"), 10, cfg), ValidationError);
  EXPECT_THROW(generate_with_budget(backend, question("q", "x"), 0, forcing()), ArgumentError);
}

TEST(RenderPrompt, ReplacesEveryPlaceholder) {
  ForcingConfig cfg = forcing();
  cfg.prompt_template = "<q>{question}</q> again: {question}";
  EXPECT_EQ(cfg.render_prompt(question("q", "2+2{question}")),
            "<q>2+2{question}</q> again: 2+2{question}");
}

TEST(SweepBudgets, NonAscendingIsArgumentError) {
  SyntheticBackend backend(3, SyntheticProfile{});
  const std::vector<int> bad = {100, 100};
  EXPECT_THROW(sweep_budgets(backend, question("q", "x"), bad, forcing()), ArgumentError);
  const std::vector<int> down = {200, 100};
  EXPECT_THROW(sweep_budgets(backend, question("q", "x"), down, forcing()), ArgumentError);
  EXPECT_THROW(sweep_budgets(backend, question("q", "x"), {}, forcing()), ArgumentError);
}

TEST(SweepBudgets, SingleBudgetMatchesDirectGeneration) {
  SyntheticProfile p;
  p.end_attempts = {120, 300};
  SyntheticBackend backend(9, p);
  const Question q = question("q", "Single budget question");
  const std::vector<int> one = {500};
  const auto swept = sweep_budgets(backend, q, one, forcing());
  ASSERT_EQ(swept.size(), 1u);
  EXPECT_EQ(swept[0], generate_with_budget(backend, q, 500, forcing()).second);
}

TEST(SweepBudgets, FullGridUsesOneThinkingGeneration) {
  SyntheticBackend inner(5, SyntheticProfile{});
  TapBackend tap(inner);
  const auto budgets = budget_range(500, 8000, 100);
  ASSERT_EQ(budgets.size(), 76u);
  const auto records = sweep_budgets(tap, question("q", "Grid question"), budgets, forcing());
  EXPECT_EQ(records.size(), 76u);
  std::size_t thinking = 0, answers = 0;
  for (const auto& [r, res] : tap.calls) (r.stop.empty() ? answers : thinking)++;
  EXPECT_EQ(thinking, 1u);
  EXPECT_EQ(answers, 76u);
}

SyntheticProfile random_profile(Gen& g) {
  SyntheticProfile p;
  std::size_t pos = static_cast<std::size_t>(g.integer(0, 30));
  for (int i = 0; i < g.integer(0, 8); ++i) {
    p.end_attempts.push_back(pos);
    pos += static_cast<std::size_t>(g.integer(0, 120));
  }
  p.repeat_every = g.chance(0.5) ? static_cast<std::size_t>(g.integer(1, 200)) : 0;
  p.end_of_text_fraction = g.chance(0.3) ? g.uniform() : 0.0;
  return p;
}

TEST(BudgetForcerProperty, ExactnessExclusionAccounting) {
  Gen g(401);
  for (int iter = 0; iter < 120; ++iter) {
    SyntheticBackend inner(static_cast<std::uint64_t>(iter + 1), random_profile(g));
    TapBackend tap(inner);
    ForcingConfig cfg = forcing();
    cfg.wait_token_cost = g.chance(0.2) ? g.integer(2, 4) : 1;
    const int budget = g.integer(1, 900);
    const auto [trace, record] =
        generate_with_budget(tap, question("q", "Prompt " + std::to_string(iter)), budget, cfg);
    ASSERT_EQ(trace.tokens.size(), static_cast<std::size_t>(budget));
    for (const auto& t : trace.tokens) ASSERT_EQ(t.text.find(kDelim), std::string::npos);
    for (int p : trace.interventions) ASSERT_LT(p, budget);
    // Every thinking completion that ended before filling its request was an
    // end attempt, and each one became exactly one intervention.
    std::size_t ended_early = 0;
    for (const auto& [r, res] : tap.calls) {
      if (r.stop.empty()) continue;
      if (res.finish != FinishReason::kLength &&
          res.tokens.size() < static_cast<std::size_t>(r.max_tokens)) {
        ++ended_early;
      }
    }
    ASSERT_EQ(trace.interventions.size(), ended_early);
    ASSERT_EQ(record.interventions, static_cast<int>(ended_early));
  }
}

TEST(BudgetForcerProperty, MasterTracesSharePrefixes) {
  Gen g(402);
  for (int iter = 0; iter < 60; ++iter) {
    SyntheticBackend backend(static_cast<std::uint64_t>(iter + 100), random_profile(g));
    const Question q = question("q", "Prefix prompt " + std::to_string(iter));
    const int b1 = g.integer(1, 400);
    const int b2 = b1 + g.integer(1, 400);
    const auto t1 = generate_with_budget(backend, q, b1, forcing()).first;
    const auto t2 = generate_with_budget(backend, q, b2, forcing()).first;
    for (int i = 0; i < b1; ++i) {
      ASSERT_EQ(t1.tokens[static_cast<std::size_t>(i)], t2.tokens[static_cast<std::size_t>(i)]);
    }
  }
}

TEST(BudgetForcerProperty, SweepEqualsPerBudget) {
  Gen g(403);
  for (int iter = 0; iter < 30; ++iter) {
    SyntheticBackend backend(static_cast<std::uint64_t>(iter + 500), random_profile(g));
    const Question q = question("q", "Sweep prompt " + std::to_string(iter));
    std::vector<int> budgets;
    for (int b = g.integer(1, 40); b <= 600; b += g.integer(1, 150)) budgets.push_back(b);
    const auto swept = sweep_budgets(backend, q, budgets, forcing());
    ASSERT_EQ(swept.size(), budgets.size());
    for (std::size_t i = 0; i < budgets.size(); ++i) {
      ASSERT_EQ(swept[i], generate_with_budget(backend, q, budgets[i], forcing()).second)
          << "budget " << budgets[i];
    }
  }
}

// ---------------------------------------------------------------------------
// run_dataset

class RunDataset : public ::testing::Test {
 protected:
  RunDataset() : backend_(21, SyntheticProfile{}), questions_(testing::numbered_questions(60)) {
    budgets_ = budget_range(500, 8000, 100);
  }
  SyntheticBackend backend_;
  std::vector<Question> questions_;
  std::vector<int> budgets_;
};

TEST_F(RunDataset, WritesEveryPair) {
  MemorySink sink;
  const auto s = run_dataset(backend_, questions_, budgets_, forcing(), {}, sink);
  EXPECT_EQ(s.records_written, 4560u);
  EXPECT_EQ(sink.records.size(), 4560u);
  EXPECT_EQ(s.completed, 60u);
  EXPECT_TRUE(s.failures.empty());
  EXPECT_EQ(s.thinking_tokens, 60u * 8000u);
  EXPECT_EQ(sink.traces.size(), 60u);
}

TEST_F(RunDataset, ResumeWritesOnlyMissing) {
  MemorySink sink;
  std::size_t n = 0;
  for (const auto& q : questions_) {
    for (int b : budgets_) {
      if (n++ < 4000) sink.preload(q.id, b);
    }
  }
  const auto s = run_dataset(backend_, questions_, budgets_, forcing(), {}, sink);
  EXPECT_EQ(s.records_written, 560u);
  EXPECT_EQ(s.records_skipped, 4000u);
  EXPECT_EQ(s.completed, 60u);
}

TEST_F(RunDataset, FailingQuestionIsIsolated) {
  TapBackend tap(backend_);
  const std::string bad = questions_[17].prompt;
  tap.fail = [&](const CompletionRequest& r) { return r.context.rfind(bad, 0) == 0; };
  MemorySink sink;
  const std::vector<int> few = {100, 200};
  const auto s = run_dataset(tap, questions_, few, forcing(), {}, sink);
  ASSERT_EQ(s.failures.size(), 1u);
  EXPECT_EQ(s.failures[0].question_id, "q17");
  EXPECT_EQ(s.failures[0].code, ErrorCode::kTransport);
  EXPECT_EQ(s.completed, 59u);
  EXPECT_EQ(s.records_written, 118u);
}

TEST_F(RunDataset, AllFailingRaisesRunFailed) {
  TapBackend tap(backend_);
  tap.fail = [](const CompletionRequest&) { return true; };
  MemorySink sink;
  const std::vector<int> few = {100};
  try {
    run_dataset(tap, questions_, few, forcing(), {}, sink);
    FAIL() << "expected RunFailedError";
  } catch (const RunFailedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRunFailed);
    EXPECT_EQ(e.cause(), ErrorCode::kTransport);
  }
}

TEST_F(RunDataset, ConcurrencyAndModeDoNotChangeRecords) {
  const std::vector<int> few = {50, 100, 250};
  auto sorted = [](std::vector<AnswerRecord> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      return std::tie(a.question_id, a.budget) < std::tie(b.question_id, b.budget);
    });
    return v;
  };
  MemorySink serial, parallel, independent;
  run_dataset(backend_, questions_, few, forcing(), {1, true}, serial);
  run_dataset(backend_, questions_, few, forcing(), {4, true}, parallel);
  run_dataset(backend_, questions_, few, forcing(), {3, false}, independent);
  EXPECT_EQ(sorted(serial.records), sorted(parallel.records));
  EXPECT_EQ(sorted(serial.records), sorted(independent.records));
}

TEST_F(RunDataset, RejectsBadOptions) {
  MemorySink sink;
  const std::vector<int> few = {100};
  EXPECT_THROW(run_dataset(backend_, questions_, few, forcing(), {0, true}, sink), ArgumentError);
}

}  // namespace
}  // namespace abstain
