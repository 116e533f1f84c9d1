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

#include "abstain/run_config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "abstain/digest.hpp"
#include "abstain/errors.hpp"
#include "abstain/offline_backends.hpp"
#include "abstain/questions.hpp"
#include "json.hpp"

namespace abstain {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = s.find(sep, start);
    parts.push_back(trim(s.substr(start, p == std::string_view::npos ? p : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return parts;
}

int parse_int(std::string_view s, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ArgumentError(std::string(what) + ": '" + std::string(s) + "' is not an integer");
  }
  return v;
}

double parse_double(std::string_view s, const char* what) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ArgumentError(std::string(what) + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_digest(const std::filesystem::path& path) {
  if (path.empty()) return "";
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

// Accepts either a string spec or a JSON array.
template <typename T, typename ParseString, typename FromElement>
std::vector<T> list_option(const json& v, ParseString parse_string, FromElement from_element) {
  if (v.is_string()) return parse_string(v.get<std::string>());
  if (!v.is_array()) throw ArgumentError("expected a string or an array");
  std::vector<T> out;
  for (const auto& e : v) out.push_back(from_element(e));
  return out;
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kNetwork: return "network";
    case BackendKind::kScripted: return "scripted";
    case BackendKind::kSynthetic: return "synthetic";
  }
  return "network";
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "network") return BackendKind::kNetwork;
  if (name == "scripted") return BackendKind::kScripted;
  if (name == "synthetic") return BackendKind::kSynthetic;
  throw ArgumentError("backend: unknown backend '" + std::string(name) +
                      "' (expected network, scripted or synthetic)");
}

std::vector<int> budget_range(int start, int stop, int step) {
  if (step <= 0) throw ArgumentError("budgets: step must be positive");
  if (start < 1) throw ArgumentError("budgets: start must be at least 1");
  if (stop < start) throw ArgumentError("budgets: stop must not be below start");
  std::vector<int> out;
  for (long long b = start; b <= stop; b += step) out.push_back(static_cast<int>(b));
  return out;
}

DatasetPreset dataset_preset(std::string_view name) {
  if (name == "aime") return {"aime", budget_range(500, 8000, 100), default_thresholds(),
                              AnswerFormat::kInteger3};
  if (name == "gpqa") return {"gpqa", budget_range(500, 4000, 100), default_thresholds(),
                              AnswerFormat::kMc4};
  throw ArgumentError("preset: unknown preset '" + std::string(name) + "' (expected aime or gpqa)");
}

ModelPreset model_preset(std::string_view name) {
  if (name == "r1") {
    return {"</think>",
            "<\xef\xbd\x9c" "begin\xe2\x96\x81of\xe2\x96\x81sentence\xef\xbd\x9c><\xef\xbd\x9cUser\xef\xbd\x9c>"
            "{question}<\xef\xbd\x9c" "Assistant\xef\xbd\x9c><think>\n"};
  }
  if (name == "s1") {
    return {"<|im_start|>answer",
            "<|im_start|>system\nYou are Qwen, created by Alibaba Cloud. You are a helpful "
            "assistant.<|im_end|>\n<|im_start|>user\n{question}<|im_end|>\n"
            "<|im_start|>assistant\n<|im_start|>think\n"};
  }
  throw ArgumentError("model_preset: unknown model preset '" + std::string(name) +
                      "' (expected r1 or s1)");
}

std::vector<int> parse_budget_spec(std::string_view spec) {
  spec = trim(spec);
  if (spec.empty()) throw ArgumentError("budgets: empty budget specification");
  if (spec.find(':') != std::string_view::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw ArgumentError("budgets: expected A:B:S, got '" + std::string(spec) + "'");
    return budget_range(parse_int(parts[0], "budgets"), parse_int(parts[1], "budgets"),
                        parse_int(parts[2], "budgets"));
  }
  std::vector<int> out;
  for (const auto part : split(spec, ',')) out.push_back(parse_int(part, "budgets"));
  return out;
}

std::vector<double> parse_threshold_list(std::string_view list) {
  list = trim(list);
  if (list.empty()) throw ArgumentError("thresholds: empty threshold list");
  std::vector<double> out;
  for (const auto part : split(list, ',')) out.push_back(parse_double(part, "thresholds"));
  return out;
}

std::vector<Scenario> parse_scenario_list(std::string_view list) {
  list = trim(list);
  if (list.empty()) throw ArgumentError("scenarios: empty scenario list");
  std::vector<Scenario> out;
  for (const auto part : split(list, ',')) out.push_back(parse_scenario(part));
  return out;
}

void RunConfig::validate() const {
  if (budgets.empty()) {
    throw ValidationError("budgets: no budgets configured (pass --budgets or --preset)");
  }
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1) throw ValidationError("budgets: every budget must be positive");
    if (i > 0 && budgets[i] <= budgets[i - 1]) {
      throw ValidationError("budgets: budgets must be strictly ascending");
    }
  }
  if (thresholds.empty()) throw ValidationError("thresholds: threshold list is empty");
  std::set<double> seen_t;
  for (double t : thresholds) {
    if (!(t >= 0.0 && t < 1.0)) {
      throw ValidationError("thresholds: " + std::to_string(t) + " is outside [0, 1)");
    }
    if (!seen_t.insert(t).second) throw ValidationError("thresholds: duplicate threshold");
  }
  if (scenarios.empty()) throw ValidationError("scenarios: scenario list is empty");
  std::set<std::string> seen_s;
  for (const auto& s : scenarios) {
    if (!seen_s.insert(s.name).second) {
      throw ValidationError("scenarios: duplicate scenario '" + s.name + "'");
    }
  }
  if (concurrency < 1) throw ValidationError("concurrency: must be at least 1");
  try {
    forcing.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("forcing: ") + e.what());
  }
  if (questions.empty()) throw ValidationError("questions: no questions file given");
  if (records.empty()) throw ValidationError("records: no records file given");
  switch (backend) {
    case BackendKind::kNetwork:
      if (http.model.empty()) throw ValidationError("model: required for the network backend");
      parse_endpoint(http.endpoint);
      if (http.timeout.count() <= 0) throw ValidationError("timeout: must be positive");
      break;
    case BackendKind::kScripted:
      if (script.empty()) throw ValidationError("script: required for the scripted backend");
      break;
    case BackendKind::kSynthetic:
      break;
  }
}

std::string RunConfig::canonical() const {
  ojson j;
  j["backend"] = to_string(backend);
  if (backend == BackendKind::kNetwork) j["model"] = http.model;
  if (backend == BackendKind::kScripted) j["script_sha256"] = file_digest(script);
  if (backend == BackendKind::kSynthetic) {
    j["seed"] = seed;
    j["synthetic_profile_sha256"] = file_digest(synthetic_profile);
  }
  j["questions_sha256"] = file_digest(questions);
  j["format_default"] = to_string(format_default);
  ojson f;
  f["delimiter"] = forcing.delimiter;
  f["wait_text"] = forcing.wait_text;
  f["answer_cue"] = forcing.answer_cue;
  f["answer_max_tokens"] = forcing.answer_max_tokens;
  f["wait_token_cost"] = forcing.wait_token_cost;
  f["prompt_template"] = forcing.prompt_template;
  j["forcing"] = std::move(f);
  return j.dump();
}

std::string RunConfig::hash() const { return sha256_hex(canonical()); }

RunConfig run_config_from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ArgumentError("config: expected a JSON object");

  static const std::set<std::string> kKnown = {
      "backend", "endpoint", "model", "api_key_env", "timeout_s", "script",
      "synthetic_profile", "seed", "preset", "budgets", "thresholds", "scenarios",
      "concurrency", "resume", "sweep", "delimiter", "wait_text", "answer_cue",
      "answer_max_tokens", "wait_cost", "prompt_template", "model_preset", "format_default",
      "questions", "records", "traces", "out"};
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.count(key)) throw ArgumentError("config: unknown option '" + key + "'");
  }

  RunConfig c;
  auto opt = [&](const char* key) -> const json* {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
  };
  auto str = [&](const char* key) -> std::optional<std::string> {
    const json* v = opt(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ArgumentError(std::string(key) + ": expected a string");
    return v->get<std::string>();
  };
  auto integer = [&](const char* key) -> std::optional<long long> {
    const json* v = opt(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) throw ArgumentError(std::string(key) + ": expected an integer");
    return v->get<long long>();
  };
  auto boolean = [&](const char* key) -> std::optional<bool> {
    const json* v = opt(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) throw ArgumentError(std::string(key) + ": expected a boolean");
    return v->get<bool>();
  };
  auto with_field = [](const char* key, auto&& fn) {
    try {
      return fn();
    } catch (const ArgumentError& e) {
      const std::string msg = e.what();
      if (msg.rfind(key, 0) == 0) throw;
      throw ArgumentError(std::string(key) + ": " + msg);
    }
  };

  if (auto v = str("backend")) c.backend = parse_backend_kind(*v);

  std::optional<DatasetPreset> preset;
  if (auto v = str("preset")) preset = dataset_preset(*v);
  if (preset) {
    c.budgets = preset->budgets;
    c.thresholds = preset->thresholds;
    c.format_default = preset->format;
  }

  if (const json* v = opt("budgets")) {
    c.budgets = with_field("budgets", [&] {
      return list_option<int>(
          *v, [](const std::string& s) { return parse_budget_spec(s); },
          [](const json& e) {
            if (!e.is_number_integer()) throw ArgumentError("expected integer budgets");
            return e.get<int>();
          });
    });
  }
  if (const json* v = opt("thresholds")) {
    c.thresholds = with_field("thresholds", [&] {
      return list_option<double>(
          *v, [](const std::string& s) { return parse_threshold_list(s); },
          [](const json& e) {
            if (!e.is_number()) throw ArgumentError("expected numeric thresholds");
            return e.get<double>();
          });
    });
  }
  if (const json* v = opt("scenarios")) {
    c.scenarios = with_field("scenarios", [&] {
      return list_option<Scenario>(
          *v, [](const std::string& s) { return parse_scenario_list(s); },
          [](const json& e) {
            if (!e.is_string()) throw ArgumentError("expected scenario names");
            return parse_scenario(e.get<std::string>());
          });
    });
  }
  if (auto v = str("format_default")) {
    c.format_default = with_field("format_default", [&] { return parse_answer_format(*v); });
  }

  if (auto v = str("endpoint")) c.http.endpoint = *v;
  if (auto v = str("model")) c.http.model = *v;
  if (auto v = str("api_key_env")) c.http.api_key_env = *v;
  if (const json* v = opt("timeout_s")) {
    if (!v->is_number() || v->get<double>() <= 0) {
      throw ArgumentError("timeout_s: expected a positive number");
    }
    c.http.timeout = std::chrono::milliseconds(static_cast<long long>(v->get<double>() * 1000.0));
  }
  if (auto v = str("script")) c.script = *v;
  if (auto v = str("synthetic_profile")) c.synthetic_profile = *v;
  if (const json* v = opt("seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      throw ArgumentError("seed: expected a non-negative integer");
    }
    c.seed = v->get<std::uint64_t>();
  }
  if (auto v = integer("concurrency")) c.concurrency = static_cast<int>(*v);
  if (auto v = boolean("resume")) c.resume = *v;
  if (auto v = boolean("sweep")) c.sweep = *v;

  // Forcing: explicit values beat the model preset, which beats backend
  // defaults. Offline fixtures define their own delimiter and wait text.
  std::optional<ScriptedBackendSpec> script_spec;
  if (c.backend == BackendKind::kScripted && !c.script.empty()) {
    script_spec = load_scripted_spec(c.script);
  }
  if (auto v = str("model_preset")) {
    const ModelPreset mp = model_preset(*v);
    c.forcing.delimiter = mp.delimiter;
    c.forcing.prompt_template = mp.prompt_template;
  } else if (c.backend == BackendKind::kSynthetic) {
    c.forcing.delimiter = "</think>";
  }
  if (script_spec) {
    c.forcing.delimiter = script_spec->delimiter;
    c.forcing.wait_text = script_spec->wait_text;
  }
  if (auto v = str("delimiter")) {
    if (script_spec && *v != script_spec->delimiter) {
      throw ValidationError("delimiter: differs from the scripted fixture's delimiter");
    }
    c.forcing.delimiter = *v;
  }
  if (auto v = str("wait_text")) {
    if (script_spec && *v != script_spec->wait_text) {
      throw ValidationError("wait_text: differs from the scripted fixture's wait text");
    }
    c.forcing.wait_text = *v;
  }
  if (auto v = str("answer_cue")) c.forcing.answer_cue = *v;
  if (auto v = integer("answer_max_tokens")) c.forcing.answer_max_tokens = static_cast<int>(*v);
  if (auto v = integer("wait_cost")) c.forcing.wait_token_cost = static_cast<int>(*v);
  if (auto v = str("prompt_template")) c.forcing.prompt_template = *v;
  if (c.backend == BackendKind::kNetwork && c.forcing.delimiter.empty()) {
    throw ValidationError(
        "delimiter: required for the network backend (pass --delimiter or --model-preset)");
  }

  if (auto v = str("questions")) c.questions = *v;
  if (auto v = str("records")) c.records = *v;
  if (auto v = str("traces")) c.traces = *v;
  if (auto v = str("out")) c.out = *v;
  if (c.records.empty() && !c.out.empty()) c.records = c.out / "records.jsonl";

  c.validate();
  return c;
}

std::unique_ptr<Backend> make_backend(const RunConfig& config,
                                      std::span<const Question> questions) {
  switch (config.backend) {
    case BackendKind::kNetwork:
      return std::make_unique<HttpBackend>(config.http);
    case BackendKind::kScripted:
      return std::make_unique<ScriptedBackend>(load_scripted_spec(config.script));
    case BackendKind::kSynthetic: {
      SyntheticProfile profile;
      if (!config.synthetic_profile.empty()) {
        profile = parse_synthetic_profile(read_file(config.synthetic_profile));
      }
      profile.answer.format = config.format_default;
      for (const auto& q : questions) {
        profile.answer.gold_by_prompt.try_emplace(config.forcing.render_prompt(q), q.gold);
      }
      return std::make_unique<SyntheticBackend>(config.seed, std::move(profile),
                                                config.forcing.delimiter,
                                                config.forcing.wait_text);
    }
  }
  throw ArgumentError("backend: unsupported backend");
}

std::filesystem::path meta_path(const std::filesystem::path& records) {
  return std::filesystem::path(records.string() + ".meta.json");
}

std::string recorded_config_hash(const std::filesystem::path& records) {
  std::ifstream in(meta_path(records), std::ios::binary);
  if (!in) return "unrecorded";
  try {
    const json j = json::parse(in);
    return j.at("config_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed records metadata '") + meta_path(records).string() +
                         "': " + e.what(),
                     0);
  }
}

RunOutcome execute_run(const RunConfig& config, JsonlRecordFile::Clock clock) {
  config.validate();
  const auto questions = load_questions(config.questions, config.format_default);
  if (questions.empty()) throw ValidationError("questions: '" + config.questions.string() + "' has no questions");

  RunOutcome outcome;
  outcome.config_hash = config.hash();

  const auto meta = meta_path(config.records);
  if (config.resume && std::filesystem::exists(meta)) {
    const std::string previous = recorded_config_hash(config.records);
    if (previous != outcome.config_hash) {
      throw ValidationError("resume: records file '" + config.records.string() +
                            "' was produced by config " + previous + ", current config is " +
                            outcome.config_hash);
    }
  }
  if (config.records.has_parent_path()) {
    std::filesystem::create_directories(config.records.parent_path());
  }

  auto backend = make_backend(config, questions);
  JsonlRecordFile sink(config.records, config.resume, std::move(clock),
                       config.traces.empty() ? std::nullopt
                                             : std::optional<std::filesystem::path>(config.traces));
  outcome.existing_records = sink.existing();
  {
    ojson m;
    m["config_hash"] = outcome.config_hash;
    m["config"] = ojson::parse(config.canonical());
    std::ofstream out(meta, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + meta.string() + "'");
    out << m.dump(2) << '\n';
  }

  RunOptions options;
  options.concurrency = config.concurrency;
  options.sweep = config.sweep;
  try {
    outcome.summary = run_dataset(*backend, questions, config.budgets, config.forcing, options, sink);
  } catch (...) {
    sink.close();
    throw;
  }
  sink.close();
  return outcome;
}

std::string summary_to_json(const RunOutcome& outcome) {
  const RunSummary& s = outcome.summary;
  ojson j;
  j["config_hash"] = outcome.config_hash;
  j["questions"] = s.questions;
  j["completed"] = s.completed;
  j["records_existing"] = outcome.existing_records;
  j["records_written"] = s.records_written;
  j["records_skipped"] = s.records_skipped;
  j["parse_failures"] = s.parse_failures;
  j["thinking_tokens"] = s.thinking_tokens;
  j["answer_tokens"] = s.answer_tokens;
  ojson failures = ojson::array();
  for (const auto& f : s.failures) {
    failures.push_back({{"qid", f.question_id}, {"code", to_string(f.code)}, {"message", f.message}});
  }
  j["failures"] = std::move(failures);
  return j.dump();
}

}  // namespace abstain
