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

// Run configuration, presets and the run command.

#ifndef ABSTAIN_RUN_CONFIG_HPP_
#define ABSTAIN_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abstain/backend.hpp"
#include "abstain/budget_forcer.hpp"
#include "abstain/http_backend.hpp"
#include "abstain/record_store.hpp"
#include "abstain/types.hpp"

namespace abstain {

enum class BackendKind { kNetwork, kScripted, kSynthetic };
std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);

struct DatasetPreset {
  std::string name;
  std::vector<int> budgets;
  std::vector<double> thresholds;
  AnswerFormat format = AnswerFormat::kInteger3;
};
// "aime" or "gpqa"; throws ArgumentError otherwise.
DatasetPreset dataset_preset(std::string_view name);

struct ModelPreset {
  std::string delimiter;
  std::string prompt_template;
};
// "r1" or "s1"; throws ArgumentError otherwise.
ModelPreset model_preset(std::string_view name);

// Inclusive arithmetic range.
std::vector<int> budget_range(int start, int stop, int step);
// "A:B:S" (inclusive) or a comma separated list.
std::vector<int> parse_budget_spec(std::string_view spec);
std::vector<double> parse_threshold_list(std::string_view list);
std::vector<Scenario> parse_scenario_list(std::string_view list);

inline const std::vector<double>& default_thresholds() {
  static const std::vector<double> kThresholds = {0.0, 0.5, 0.95};
  return kThresholds;
}

struct RunConfig {
  BackendKind backend = BackendKind::kNetwork;
  HttpBackendConfig http;
  std::filesystem::path script;             // scripted backend fixture
  std::filesystem::path synthetic_profile;  // optional, synthetic backend
  std::uint64_t seed = 0;                   // synthetic backend

  std::vector<int> budgets;
  std::vector<double> thresholds = default_thresholds();
  std::vector<Scenario> scenarios = default_scenarios();
  int concurrency = 1;
  bool sweep = true;
  bool resume = false;
  ForcingConfig forcing;
  AnswerFormat format_default = AnswerFormat::kInteger3;

  std::filesystem::path questions;
  std::filesystem::path records;
  std::filesystem::path traces;  // empty: traces are not kept
  std::filesystem::path out;

  // Throws ValidationError naming the offending field.
  void validate() const;

  // Canonical JSON of everything that determines record contents: backend,
  // model, forcing, answer format and digests of the questions
  // and fixture files. Budgets, thresholds, paths, concurrency, transport
  // settings and credentials are left out so a run can be resumed over an
  // extended budget grid.
  std::string canonical() const;
  std::string hash() const;
};

// Resolves a JSON object of option values (keys as in the CLI, underscores
// for dashes) against presets and backend defaults, then validates it.
RunConfig run_config_from_json(std::string_view json_text);

// The synthetic backend is told each rendered prompt's gold answer so that
// its correctness model applies to the questions being run.
std::unique_ptr<Backend> make_backend(const RunConfig& config,
                                      std::span<const Question> questions);

// Sidecar written next to the records file; carries the config hash.
std::filesystem::path meta_path(const std::filesystem::path& records);
// Config hash recorded for a records file, or "unrecorded".
std::string recorded_config_hash(const std::filesystem::path& records);

struct RunOutcome {
  RunSummary summary;
  std::string config_hash;
  std::size_t existing_records = 0;
};

// Executes the run command: loads questions, opens the records file (resuming
// when configured), evaluates missing pairs and flushes. Throws
// RunFailedError when every question with pending work failed.
RunOutcome execute_run(const RunConfig& config, JsonlRecordFile::Clock clock = utc_now_iso8601);

// Single-line JSON summary.
std::string summary_to_json(const RunOutcome& outcome);

}  // namespace abstain

#endif  // ABSTAIN_RUN_CONFIG_HPP_
