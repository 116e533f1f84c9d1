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

// abstain: run | surface | plot | fit
//
// Exit codes: 0 success; 1 usage, validation, input or grid errors;
// 2 endpoint unreachable or incompatible; 3 any other run failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "abstain/abstain.h"
#include "json.hpp"

namespace {

int exit_code(abstain_status status) {
  switch (status) {
    case ABSTAIN_OK:
      return 0;
    case ABSTAIN_E_TRANSPORT:
    case ABSTAIN_E_HTTP:
    case ABSTAIN_E_CAPABILITY:
      return 2;
    case ABSTAIN_E_RUN_FAILED:
      return exit_code(abstain_last_run_cause()) == 2 ? 2 : 3;
    case ABSTAIN_E_INTERNAL:
      return 3;
    default:
      return 1;
  }
}

int report(abstain_status status) {
  if (status != ABSTAIN_OK) {
    std::cerr << "abstain: error [" << abstain_status_name(status) << "]: " << abstain_last_error()
              << "\n";
  }
  return exit_code(status);
}

// Owns a char* filled by the library.
struct CString {
  char* p = nullptr;
  ~CString() { abstain_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

// A string-valued flag copied into the config object only when given.
struct Passthrough {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-forced reasoning runs and accuracy/coverage/utility surfaces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(abstain_version()));

  // run --------------------------------------------------------------------
  CLI::App* run = app.add_subcommand("run", "Evaluate every missing (question, budget) pair");
  std::vector<Passthrough> strings;
  struct Flag {
    const char* flag;
    const char* key;
    const char* help;
  };
  const std::vector<Flag> string_flags = {
      {"--backend", "backend", "network | scripted | synthetic (default network)"},
      {"--endpoint", "endpoint", "completions endpoint URL"},
      {"--model", "model", "model name sent to the endpoint"},
      {"--api-key-env", "api_key_env", "environment variable holding the bearer token"},
      {"--questions", "questions", "questions JSONL file"},
      {"--records", "records", "records JSONL file (default OUT/records.jsonl)"},
      {"--traces", "traces", "optional sidecar JSONL for reasoning traces"},
      {"--out", "out", "output directory"},
      {"--budgets", "budgets", "A:B:S (inclusive) or a comma list"},
      {"--thresholds", "thresholds", "comma list in [0, 1)"},
      {"--scenarios", "scenarios", "comma list of exam, jeopardy, high_stakes or name=reward"},
      {"--preset", "preset", "aime | gpqa"},
      {"--model-preset", "model_preset", "r1 | s1 (delimiter and prompt template)"},
      {"--delimiter", "delimiter", "end-of-thinking delimiter"},
      {"--wait-text", "wait_text", "continuation injected on suppressed ends"},
      {"--answer-cue", "answer_cue", "text appended after the delimiter"},
      {"--prompt-template", "prompt_template", "prompt template containing {question}"},
      {"--format-default", "format_default", "integer3 | mc4 for questions without a format"},
      {"--script", "script", "scripted backend fixture (JSON)"},
      {"--synthetic-profile", "synthetic_profile", "synthetic backend profile (JSON)"},
  };
  strings.reserve(string_flags.size());
  for (const auto& f : string_flags) {
    strings.push_back({f.key, "", nullptr});
    strings.back().option = run->add_option(f.flag, strings.back().value, f.help);
  }
  int concurrency = 1, answer_max_tokens = 0, wait_cost = 0;
  double timeout_s = 0;
  std::uint64_t seed = 0;
  bool resume = false, no_sweep = false;
  std::string run_timestamp;
  auto* o_conc = run->add_option("--concurrency", concurrency, "questions in flight");
  auto* o_amt = run->add_option("--answer-max-tokens", answer_max_tokens, "answer-phase token cap");
  auto* o_wc = run->add_option("--wait-cost", wait_cost, "trace slots charged per injected wait");
  auto* o_to = run->add_option("--timeout", timeout_s, "per-request timeout in seconds");
  auto* o_seed = run->add_option("--seed", seed, "synthetic backend seed");
  run->add_flag("--resume", resume, "continue an existing records file");
  run->add_flag("--no-sweep", no_sweep, "generate each budget independently");
  run->add_option("--timestamp", run_timestamp, "fixed created_at value for new records");

  // surface ----------------------------------------------------------------
  CLI::App* surface = app.add_subcommand("surface", "Aggregate records into surface files");
  std::string s_records, s_budgets, s_thresholds, s_scenarios, s_out = ".", s_timestamp;
  surface->add_option("--records", s_records, "records JSONL file")->required();
  auto* s_o_budgets = surface->add_option("--budgets", s_budgets, "budget grid (default: present)");
  auto* s_o_thresholds = surface->add_option("--thresholds", s_thresholds, "comma list in [0, 1)");
  auto* s_o_scenarios = surface->add_option("--scenarios", s_scenarios, "comma list of scenarios");
  surface->add_option("--out", s_out, "output directory");
  surface->add_option("--timestamp", s_timestamp, "fixed generated_at value");

  // plot -------------------------------------------------------------------
  CLI::App* plot = app.add_subcommand("plot", "Render SVG figures");
  std::string p_kind, p_input, p_scenario = "exam", p_metric = "accuracy", p_axis = "probability",
                      p_out = ".";
  plot->add_option("--kind", p_kind, "threshold_slices | utility_surface | confidence_scatter")
      ->required();
  plot->add_option("--input", p_input, "surface.json, or records for confidence_scatter")
      ->required();
  plot->add_option("--scenario", p_scenario, "scenario to draw");
  plot->add_option("--metric", p_metric, "accuracy | utility (threshold_slices)");
  plot->add_option("--axis", p_axis, "probability | logprob (confidence_scatter)");
  plot->add_option("--out", p_out, "output directory");

  // fit --------------------------------------------------------------------
  CLI::App* fit = app.add_subcommand("fit", "Per-class cubic confidence trends");
  std::string f_records, f_axis = "probability", f_out;
  fit->add_option("--records", f_records, "records JSONL file")->required();
  fit->add_option("--axis", f_axis, "probability | logprob");
  fit->add_option("--out", f_out, "write the trends JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*run) {
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& s : strings) {
      if (s.option->count() > 0) cfg[s.key] = s.value;
    }
    if (o_conc->count()) cfg["concurrency"] = concurrency;
    if (o_amt->count()) cfg["answer_max_tokens"] = answer_max_tokens;
    if (o_wc->count()) cfg["wait_cost"] = wait_cost;
    if (o_to->count()) cfg["timeout_s"] = timeout_s;
    if (o_seed->count()) cfg["seed"] = seed;
    cfg["resume"] = resume;
    cfg["sweep"] = !no_sweep;

    abstain_config* config = nullptr;
    abstain_status st = abstain_config_from_json(cfg.dump().c_str(), &config);
    if (st != ABSTAIN_OK) return report(st);
    CString summary;
    st = abstain_run(config, run_timestamp.empty() ? nullptr : run_timestamp.c_str(), &summary.p);
    abstain_config_free(config);
    if (st != ABSTAIN_OK) return report(st);
    std::cout << summary.str() << "\n";
    return 0;
  }

  if (*surface) {
    abstain_records* records = nullptr;
    abstain_status st = abstain_records_load(s_records.c_str(), &records);
    if (st != ABSTAIN_OK) return report(st);
    CString hash;
    st = abstain_records_config_hash(s_records.c_str(), &hash.p);
    abstain_surface* surf = nullptr;
    if (st == ABSTAIN_OK) {
      st = abstain_surface_build(records, s_o_budgets->count() ? s_budgets.c_str() : nullptr,
                                 s_o_thresholds->count() ? s_thresholds.c_str() : nullptr,
                                 s_o_scenarios->count() ? s_scenarios.c_str() : nullptr,
                                 hash.p, s_timestamp.empty() ? nullptr : s_timestamp.c_str(),
                                 &surf);
    }
    if (st == ABSTAIN_OK) st = abstain_surface_write(surf, s_out.c_str());
    if (st == ABSTAIN_OK) {
      nlohmann::ordered_json out;
      out["config_hash"] = hash.str();
      out["records"] = abstain_records_count(records);
      out["cells"] = abstain_surface_cell_count(surf);
      out["csv"] = s_out + "/surface.csv";
      out["json"] = s_out + "/surface.json";
      std::cout << out.dump() << "\n";
    }
    abstain_surface_free(surf);
    abstain_records_free(records);
    return report(st);
  }

  if (*plot) {
    const nlohmann::json options = {{"scenario", p_scenario}, {"metric", p_metric}, {"axis", p_axis}};
    CString path;
    const abstain_status st = abstain_plot(p_kind.c_str(), p_input.c_str(),
                                           options.dump().c_str(), p_out.c_str(), &path.p);
    if (st != ABSTAIN_OK) return report(st);
    std::cout << nlohmann::json({{"plot", path.str()}}).dump() << "\n";
    return 0;
  }

  if (*fit) {
    abstain_records* records = nullptr;
    abstain_status st = abstain_records_load(f_records.c_str(), &records);
    if (st != ABSTAIN_OK) return report(st);
    CString hash, trends;
    st = abstain_records_config_hash(f_records.c_str(), &hash.p);
    if (st == ABSTAIN_OK) st = abstain_fit_trends(records, f_axis.c_str(), hash.p, &trends.p);
    abstain_records_free(records);
    if (st != ABSTAIN_OK) return report(st);
    if (f_out.empty()) {
      std::cout << trends.str();
    } else {
      std::ofstream out(f_out, std::ios::binary | std::ios::trunc);
      out << trends.str();
      if (!out) {
        std::cerr << "abstain: error [io]: cannot write '" << f_out << "'\n";
        return 1;
      }
      std::cout << nlohmann::json({{"fit", f_out}}).dump() << "\n";
    }
    return 0;
  }
  return 1;
}
