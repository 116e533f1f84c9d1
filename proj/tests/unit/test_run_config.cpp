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
#include <filesystem>

#include "abstain/errors.hpp"
#include "abstain/record_store.hpp"
#include "abstain/run_config.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace abstain {
namespace {

using nlohmann::json;
using testing::Gen;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

const std::filesystem::path kGolden = std::filesystem::path(ABSTAIN_TEST_DATA_DIR) / "golden";
const auto kClock = [] { return std::string("2026-01-01T00:00:00Z"); };

json golden_config(const TempDir& dir) {
  return {{"backend", "scripted"},
          {"script", (kGolden / "script.json").string()},
          {"questions", (kGolden / "questions.jsonl").string()},
          {"budgets", "4,8,12,16"},
          {"out", dir.path().string()}};
}

std::string validation_field(const json& cfg) {
  try {
    run_config_from_json(cfg.dump());
  } catch (const ValidationError& e) {
    const std::string m = e.what();
    return m.substr(0, m.find(':'));
  } catch (const ArgumentError& e) {
    const std::string m = e.what();
    return "arg:" + m.substr(0, m.find(':'));
  }
  return "ok";
}

TEST(Presets, Aime) {
  const auto p = dataset_preset("aime");
  ASSERT_EQ(p.budgets.size(), 76u);
  EXPECT_EQ(p.budgets.front(), 500);
  EXPECT_EQ(p.budgets.back(), 8000);
  EXPECT_EQ(p.budgets[1] - p.budgets[0], 100);
  EXPECT_EQ(p.thresholds, (std::vector<double>{0.0, 0.5, 0.95}));
  EXPECT_EQ(p.format, AnswerFormat::kInteger3);
}

TEST(Presets, Gpqa) {
  const auto p = dataset_preset("gpqa");
  EXPECT_EQ(p.budgets.front(), 500);
  EXPECT_EQ(p.budgets.back(), 4000);
  EXPECT_EQ(p.budgets.size(), 36u);
  EXPECT_EQ(p.format, AnswerFormat::kMc4);
  EXPECT_THROW(dataset_preset("math500"), ArgumentError);
}

TEST(Presets, ModelPresets) {
  EXPECT_EQ(model_preset("r1").delimiter, "</think>");
  EXPECT_NE(model_preset("s1").prompt_template.find("{question}"), std::string::npos);
  EXPECT_THROW(model_preset("gpt"), ArgumentError);
}

TEST(BudgetSpec, Forms) {
  EXPECT_EQ(parse_budget_spec("100:400:100"), (std::vector<int>{100, 200, 300, 400}));
  EXPECT_EQ(parse_budget_spec("100:450:100"), (std::vector<int>{100, 200, 300, 400}));
  EXPECT_EQ(parse_budget_spec(" 5, 10 ,20"), (std::vector<int>{5, 10, 20}));
  EXPECT_THROW(parse_budget_spec(""), ArgumentError);
  EXPECT_THROW(parse_budget_spec("1:2"), ArgumentError);
  EXPECT_THROW(parse_budget_spec("1:10:0"), ArgumentError);
  EXPECT_THROW(parse_budget_spec("ten"), ArgumentError);
  EXPECT_EQ(parse_threshold_list("0,0.5"), (std::vector<double>{0.0, 0.5}));
  EXPECT_THROW(parse_threshold_list(""), ArgumentError);
  EXPECT_EQ(parse_scenario_list("exam,odds=-3").back().incorrect_reward, -3.0);
}

TEST(RunConfigJson, PresetFillsGrid) {
  TempDir dir;
  json cfg = golden_config(dir);
  cfg.erase("budgets");
  cfg["preset"] = "aime";
  const auto c = run_config_from_json(cfg.dump());
  EXPECT_EQ(c.budgets.size(), 76u);
  EXPECT_EQ(c.records, dir.path() / "records.jsonl");
  EXPECT_EQ(c.forcing.delimiter, "</think>");
  cfg["budgets"] = "100:300:100";
  EXPECT_EQ(run_config_from_json(cfg.dump()).budgets, (std::vector<int>{100, 200, 300}));
}

TEST(RunConfigJson, ValidationNamesField) {
  TempDir dir;
  const json base = golden_config(dir);
  auto with = [&](const char* key, json value) {
    json c = base;
    c[key] = std::move(value);
    return validation_field(c);
  };
  EXPECT_EQ(validation_field(base), "ok");
  EXPECT_EQ(with("budgets", "300,200"), "budgets");
  EXPECT_EQ(with("thresholds", "0.5,1.0"), "thresholds");
  EXPECT_EQ(with("thresholds", "0.5,0.5"), "thresholds");
  EXPECT_EQ(with("concurrency", 0), "concurrency");
  EXPECT_EQ(with("scenarios", "exam,exam"), "scenarios");
  EXPECT_EQ(with("answer_max_tokens", 0), "forcing");
  EXPECT_EQ(with("delimiter", "<end>"), "delimiter");
  EXPECT_EQ(with("budgets", "abc"), "arg:budgets");
  EXPECT_EQ(with("bogus", 1), "arg:config");
  EXPECT_EQ(with("backend", "quantum"), "arg:backend");

  json net = {{"backend", "network"}, {"questions", "q.jsonl"}, {"out", "o"}, {"budgets", "10"}};
  EXPECT_EQ(validation_field(net), "delimiter");
  net["delimiter"] = "</think>";
  EXPECT_EQ(validation_field(net), "model");
  net["model"] = "m";
  EXPECT_EQ(validation_field(net), "ok");
  net["endpoint"] = "gopher://x";
  EXPECT_EQ(validation_field(net), "arg:unsupported endpoint scheme 'gopher'");
}

TEST(RunConfigJson, HashCoversContentNotLayout) {
  TempDir dir;
  const json base = golden_config(dir);
  const auto h = run_config_from_json(base.dump()).hash();
  json other = base;
  other["budgets"] = "4,8";
  other["concurrency"] = 3;
  other["thresholds"] = "0.1";
  other["out"] = (dir.path() / "elsewhere").string();
  EXPECT_EQ(run_config_from_json(other.dump()).hash(), h);
  json changed = base;
  changed["answer_cue"] = "Answer:";
  EXPECT_NE(run_config_from_json(changed.dump()).hash(), h);
  changed = base;
  changed["format_default"] = "mc4";
  EXPECT_NE(run_config_from_json(changed.dump()).hash(), h);
}

TEST(ExecuteRun, GoldenRecordsAndRerun) {
  TempDir dir;
  const auto cfg = run_config_from_json(golden_config(dir).dump());
  const auto out = execute_run(cfg, kClock);
  EXPECT_EQ(out.summary.records_written, 20u);
  EXPECT_EQ(out.summary.parse_failures, 3u);
  EXPECT_EQ(read_file(cfg.records), read_file(kGolden / "records.jsonl"));
  EXPECT_EQ(recorded_config_hash(cfg.records), cfg.hash());

  json again = golden_config(dir);
  again["resume"] = true;
  const auto rerun = execute_run(run_config_from_json(again.dump()), kClock);
  EXPECT_EQ(rerun.summary.records_written, 0u);
  EXPECT_EQ(rerun.summary.records_skipped, 20u);
  EXPECT_EQ(rerun.existing_records, 20u);
  EXPECT_EQ(read_file(cfg.records), read_file(kGolden / "records.jsonl"));

  const auto summary = json::parse(summary_to_json(rerun));
  EXPECT_EQ(summary["records_written"], 0);
  EXPECT_EQ(summary["config_hash"], cfg.hash());
}

TEST(ExecuteRun, ResumeWithDifferentConfigIsRejected) {
  TempDir dir;
  execute_run(run_config_from_json(golden_config(dir).dump()), kClock);
  json changed = golden_config(dir);
  changed["resume"] = true;
  changed["answer_cue"] = "Answer:";
  EXPECT_THROW(execute_run(run_config_from_json(changed.dump()), kClock), ValidationError);
}

TEST(ExecuteRun, ExtendingTheGridOnResume) {
  TempDir dir;
  json first = golden_config(dir);
  first["budgets"] = "4,8";
  execute_run(run_config_from_json(first.dump()), kClock);
  json second = golden_config(dir);
  second["resume"] = true;
  const auto out = execute_run(run_config_from_json(second.dump()), kClock);
  EXPECT_EQ(out.summary.records_written, 10u);
  auto got = load_records(dir / "records.jsonl");
  EXPECT_EQ(records_digest(got), records_digest(load_records(kGolden / "records.jsonl")));
}

TEST(ExecuteRunProperty, InterruptedRunsResumeToSameRecords) {
  const std::string golden = read_file(kGolden / "records.jsonl");
  const std::string want = records_digest(load_records(kGolden / "records.jsonl"));
  Gen g(801);
  for (int iter = 0; iter < 25; ++iter) {
    TempDir dir;
    // Simulate a crash: keep an arbitrary byte prefix of a finished file.
    const auto cut = static_cast<std::size_t>(g.integer(0, static_cast<int>(golden.size())));
    const auto cfg = run_config_from_json(golden_config(dir).dump());
    write_file(cfg.records, golden.substr(0, cut));
    json resume = golden_config(dir);
    resume["resume"] = true;
    resume["concurrency"] = g.integer(1, 3);
    resume["sweep"] = g.chance(0.5);
    execute_run(run_config_from_json(resume.dump()), kClock);
    const auto got = load_records(cfg.records);
    ASSERT_EQ(got.size(), 20u) << "cut at " << cut;
    ASSERT_EQ(records_digest(got), want) << "cut at " << cut;
  }
}

TEST(ExecuteRun, UnreachableEndpointFailsWithTransportCause) {
  TempDir dir;
  write_file(dir / "q.jsonl", "{\"id\":\"a\",\"question\":\"x\",\"answer\":\"1\"}\n");
  const json cfg = {{"backend", "network"},   {"endpoint", "http://127.0.0.1:9/v1/completions"},
                    {"model", "m"},           {"delimiter", "</think>"},
                    {"questions", (dir / "q.jsonl").string()},
                    {"budgets", "8"},         {"timeout_s", 0.5},
                    {"out", dir.path().string()}};
  auto c = run_config_from_json(cfg.dump());
  c.http.max_attempts = 1;
  try {
    execute_run(c, kClock);
    FAIL() << "expected RunFailedError";
  } catch (const RunFailedError& e) {
    EXPECT_EQ(e.cause(), ErrorCode::kTransport);
  }
}

TEST(MakeBackend, SyntheticUsesQuestionGold) {
  TempDir dir;
  write_file(dir / "q.jsonl",
             "{\"id\":\"a\",\"question\":\"alpha\",\"answer\":\"17\"}\n"
             "{\"id\":\"b\",\"question\":\"beta\",\"answer\":\"944\"}\n");
  const json cfg = {{"backend", "synthetic"}, {"seed", 5}, {"questions", (dir / "q.jsonl").string()},
                    {"budgets", "8000"}, {"out", dir.path().string()}};
  const auto c = run_config_from_json(cfg.dump());
  execute_run(c, kClock);
  // Far past the horizon the correctness model answers most questions right;
  // whatever it answers, "correct" must agree with the gold in the file.
  for (const auto& r : load_records(c.records)) {
    if (r.answer) {
      EXPECT_EQ(r.correct, *r.answer == (r.question_id == "a" ? "017" : "944"));
    }
  }
}

}  // namespace
}  // namespace abstain
