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

#include "abstain/abstain.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include "abstain/cubic_fit.hpp"
#include "abstain/errors.hpp"
#include "abstain/questions.hpp"
#include "abstain/record_store.hpp"
#include "abstain/run_config.hpp"
#include "abstain/surface.hpp"
#include "abstain/surface_io.hpp"
#include "abstain/svg_plot.hpp"
#include "json.hpp"

struct abstain_config {
  abstain::RunConfig config;
};

struct abstain_records {
  std::vector<abstain::AnswerRecord> records;
};

struct abstain_surface {
  abstain::SurfaceReport report;
};

namespace {

thread_local std::string g_last_error;
thread_local abstain_status g_last_cause = ABSTAIN_OK;

abstain_status fail(abstain_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
abstain_status guarded(Fn&& fn) {
  try {
    fn();
    return ABSTAIN_OK;
  } catch (const abstain::RunFailedError& e) {
    g_last_cause = static_cast<abstain_status>(e.cause());
    return fail(ABSTAIN_E_RUN_FAILED, e.what());
  } catch (const abstain::Error& e) {
    return fail(static_cast<abstain_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ABSTAIN_E_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ABSTAIN_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ABSTAIN_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ABSTAIN_E_INTERNAL, e.what());
  } catch (...) {
    return fail(ABSTAIN_E_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* name) {
  if (!p) throw abstain::ArgumentError(std::string(name) + " must not be NULL");
}

void fill_cell(const abstain::SurfaceCell& c, abstain_cell* out) {
  out->budget = c.budget;
  out->threshold = c.threshold;
  out->scenario = c.scenario.name.c_str();
  out->incorrect_reward = c.scenario.incorrect_reward;
  out->n_total = c.n_total;
  out->n_answered = c.n_answered;
  out->n_correct = c.n_correct;
  out->coverage = c.coverage;
  out->answered_accuracy = c.answered_accuracy;
  out->mean_utility = c.mean_utility;
}

// Slices copy cells out of the surface, so scenario names are pointed back
// at the surface-owned strings.
abstain_status copy_slice(const abstain_surface* surface,
                          const std::vector<abstain::SurfaceCell>& slice, abstain_cell* out,
                          size_t capacity, size_t* count) {
  *count = slice.size();
  for (size_t i = 0; i < slice.size() && i < capacity; ++i) {
    fill_cell(slice[i], &out[i]);
    for (const auto& s : surface->report.surface.scenarios) {
      if (s.name == slice[i].scenario.name) out[i].scenario = s.name.c_str();
    }
  }
  return ABSTAIN_OK;
}

nlohmann::ordered_json fit_json(const std::optional<abstain::CubicFit>& fit) {
  if (!fit) return nullptr;
  nlohmann::ordered_json j;
  j["coefficients"] = fit->coefficients;
  j["budget_min"] = fit->budget_min;
  j["budget_max"] = fit->budget_max;
  j["residual_norm"] = fit->residual_norm;
  j["points"] = fit->points;
  return j;
}

}  // namespace

extern "C" {

const char* abstain_version(void) { return "0.1.0"; }

const char* abstain_status_name(abstain_status status) {
  switch (status) {
    case ABSTAIN_OK: return "ok";
    case ABSTAIN_E_INTERNAL: return "internal";
    default: break;
  }
  const int v = static_cast<int>(status);
  if (v >= 1 && v <= 11) return abstain::to_string(static_cast<abstain::ErrorCode>(v)).data();
  return "unknown";
}

const char* abstain_last_error(void) { return g_last_error.c_str(); }

abstain_status abstain_last_run_cause(void) { return g_last_cause; }

void abstain_string_free(char* s) { std::free(s); }

abstain_status abstain_config_from_json(const char* json, abstain_config** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = nullptr;
    auto cfg = std::make_unique<abstain_config>();
    cfg->config = abstain::run_config_from_json(json);
    *out = cfg.release();
  });
}

void abstain_config_free(abstain_config* config) { delete config; }

abstain_status abstain_config_hash(const abstain_config* config, char** out_hex) {
  return guarded([&] {
    require(config, "config");
    require(out_hex, "out_hex");
    *out_hex = dup(config->config.hash());
  });
}

abstain_status abstain_config_to_json(const abstain_config* config, char** out_json) {
  return guarded([&] {
    require(config, "config");
    require(out_json, "out_json");
    const auto& c = config->config;
    auto j = nlohmann::ordered_json::parse(c.canonical());
    j["config_hash"] = c.hash();
    j["endpoint"] = c.http.endpoint;
    j["api_key_env"] = c.http.api_key_env;
    j["timeout_s"] = static_cast<double>(c.http.timeout.count()) / 1000.0;
    j["budgets"] = c.budgets;
    j["thresholds"] = c.thresholds;
    nlohmann::ordered_json scenarios = nlohmann::ordered_json::array();
    for (const auto& s : c.scenarios) {
      scenarios.push_back({{"name", s.name}, {"incorrect_reward", s.incorrect_reward}});
    }
    j["scenarios"] = std::move(scenarios);
    j["concurrency"] = c.concurrency;
    j["sweep"] = c.sweep;
    j["resume"] = c.resume;
    j["questions"] = c.questions.string();
    j["records"] = c.records.string();
    j["traces"] = c.traces.string();
    j["out"] = c.out.string();
    *out_json = dup(j.dump());
  });
}

abstain_status abstain_run(const abstain_config* config, const char* created_at,
                           char** out_summary) {
  g_last_cause = ABSTAIN_OK;
  return guarded([&] {
    require(config, "config");
    require(out_summary, "out_summary");
    *out_summary = nullptr;
    abstain::JsonlRecordFile::Clock clock = abstain::utc_now_iso8601;
    if (created_at) {
      std::string pinned = created_at;
      clock = [pinned] { return pinned; };
    }
    const auto outcome = abstain::execute_run(config->config, clock);
    *out_summary = dup(abstain::summary_to_json(outcome));
  });
}

abstain_status abstain_records_load(const char* path, abstain_records** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto r = std::make_unique<abstain_records>();
    r->records = abstain::load_records(path);
    *out = r.release();
  });
}

void abstain_records_free(abstain_records* records) { delete records; }

size_t abstain_records_count(const abstain_records* records) {
  return records ? records->records.size() : 0;
}

abstain_status abstain_records_digest(const abstain_records* records, char** out_hex) {
  return guarded([&] {
    require(records, "records");
    require(out_hex, "out_hex");
    *out_hex = dup(abstain::records_digest(records->records));
  });
}

abstain_status abstain_records_config_hash(const char* records_path, char** out_hex) {
  return guarded([&] {
    require(records_path, "records_path");
    require(out_hex, "out_hex");
    *out_hex = dup(abstain::recorded_config_hash(records_path));
  });
}

abstain_status abstain_surface_build(const abstain_records* records, const char* budgets,
                                     const char* thresholds, const char* scenarios,
                                     const char* config_hash, const char* generated_at,
                                     abstain_surface** out) {
  return guarded([&] {
    require(records, "records");
    require(out, "out");
    *out = nullptr;
    std::vector<int> b;
    if (budgets && *budgets) b = abstain::parse_budget_spec(budgets);
    const std::vector<double> t =
        thresholds ? abstain::parse_threshold_list(thresholds) : abstain::default_thresholds();
    const std::vector<abstain::Scenario> s =
        scenarios ? abstain::parse_scenario_list(scenarios) : abstain::default_scenarios();
    auto surface = std::make_unique<abstain_surface>();
    surface->report = abstain::make_surface_report(
        records->records, b, t, s, config_hash ? config_hash : "unrecorded",
        generated_at ? generated_at : abstain::utc_now_iso8601());
    *out = surface.release();
  });
}

abstain_status abstain_surface_load(const char* surface_json_path, abstain_surface** out) {
  return guarded([&] {
    require(surface_json_path, "surface_json_path");
    require(out, "out");
    *out = nullptr;
    auto surface = std::make_unique<abstain_surface>();
    surface->report = abstain::load_surface(surface_json_path);
    *out = surface.release();
  });
}

void abstain_surface_free(abstain_surface* surface) { delete surface; }

abstain_status abstain_surface_write(const abstain_surface* surface, const char* out_dir) {
  return guarded([&] {
    require(surface, "surface");
    require(out_dir, "out_dir");
    abstain::write_surface_files(surface->report, out_dir);
  });
}

abstain_status abstain_surface_to_csv(const abstain_surface* surface, char** out) {
  return guarded([&] {
    require(surface, "surface");
    require(out, "out");
    *out = dup(abstain::surface_to_csv(surface->report));
  });
}

abstain_status abstain_surface_to_json(const abstain_surface* surface, char** out) {
  return guarded([&] {
    require(surface, "surface");
    require(out, "out");
    *out = dup(abstain::surface_to_json(surface->report));
  });
}

size_t abstain_surface_cell_count(const abstain_surface* surface) {
  return surface ? surface->report.surface.cells.size() : 0;
}

abstain_status abstain_surface_cell(const abstain_surface* surface, size_t index,
                                    abstain_cell* out) {
  return guarded([&] {
    require(surface, "surface");
    require(out, "out");
    const auto& cells = surface->report.surface.cells;
    if (index >= cells.size()) {
      throw abstain::ArgumentError("cell index " + std::to_string(index) + " out of range (" +
                                   std::to_string(cells.size()) + " cells)");
    }
    fill_cell(cells[index], out);
  });
}

abstain_status abstain_surface_slice_threshold(const abstain_surface* surface, double threshold,
                                               const char* scenario, abstain_cell* out,
                                               size_t capacity, size_t* count) {
  return guarded([&] {
    require(surface, "surface");
    require(scenario, "scenario");
    require(count, "count");
    if (capacity > 0) require(out, "out");
    copy_slice(surface,
               abstain::slice_at_threshold(surface->report.surface, threshold, scenario), out,
               capacity, count);
  });
}

abstain_status abstain_surface_slice_budget(const abstain_surface* surface, int budget,
                                            const char* scenario, abstain_cell* out,
                                            size_t capacity, size_t* count) {
  return guarded([&] {
    require(surface, "surface");
    require(scenario, "scenario");
    require(count, "count");
    if (capacity > 0) require(out, "out");
    copy_slice(surface, abstain::slice_at_budget(surface->report.surface, budget, scenario), out,
               capacity, count);
  });
}

abstain_status abstain_optimal_threshold(const abstain_records* records, int budget,
                                         double incorrect_reward, abstain_optimum* out) {
  return guarded([&] {
    require(records, "records");
    require(out, "out");
    std::vector<abstain::AnswerRecord> at;
    for (const auto& r : records->records) {
      if (r.budget == budget) at.push_back(r);
    }
    const auto o = abstain::optimal_threshold(at, {"custom", incorrect_reward});
    *out = {o.threshold, o.utility, o.coverage};
  });
}

abstain_status abstain_fit_cubic(const double* budgets, const double* values, size_t n,
                                 abstain_cubic* out) {
  return guarded([&] {
    require(out, "out");
    if (n > 0) {
      require(budgets, "budgets");
      require(values, "values");
    }
    std::vector<std::pair<double, double>> pts;
    pts.reserve(n);
    for (size_t i = 0; i < n; ++i) pts.emplace_back(budgets[i], values[i]);
    const auto fit = abstain::fit_cubic(pts);
    for (int k = 0; k < 4; ++k) out->coefficients[k] = fit.coefficients[static_cast<size_t>(k)];
    out->budget_min = fit.budget_min;
    out->budget_max = fit.budget_max;
    out->residual_norm = fit.residual_norm;
  });
}

abstain_status abstain_fit_trends(const abstain_records* records, const char* axis,
                                  const char* config_hash, char** out_json) {
  return guarded([&] {
    require(records, "records");
    require(out_json, "out_json");
    const auto a = abstain::parse_confidence_axis(axis ? axis : "probability");
    const auto trends = abstain::fit_confidence_trends(records->records, a);
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash ? config_hash : "unrecorded";
    j["axis"] = a == abstain::ConfidenceAxis::kProbability ? "probability" : "logprob";
    j["rescale"] = "x = (budget - budget_min) / (budget_max - budget_min)";
    j["correct"] = fit_json(trends.correct);
    j["incorrect"] = fit_json(trends.incorrect);
    *out_json = dup(j.dump(2) + "\n");
  });
}

abstain_status abstain_plot(const char* kind, const char* input, const char* options_json,
                            const char* out_dir, char** out_path) {
  return guarded([&] {
    require(kind, "kind");
    require(input, "input");
    require(out_path, "out_path");
    abstain::PlotRequest req;
    req.kind = abstain::parse_plot_kind(kind);
    req.input = input;
    req.out_dir = out_dir ? out_dir : ".";
    if (options_json && *options_json) {
      nlohmann::json o;
      try {
        o = nlohmann::json::parse(options_json);
      } catch (const nlohmann::json::exception& e) {
        throw abstain::ArgumentError(std::string("plot options: ") + e.what());
      }
      if (o.contains("scenario")) req.scenario = o["scenario"].get<std::string>();
      if (o.contains("metric")) req.metric = abstain::parse_slice_metric(o["metric"].get<std::string>());
      if (o.contains("axis")) req.axis = abstain::parse_confidence_axis(o["axis"].get<std::string>());
    }
    *out_path = dup(abstain::write_plot(req).string());
  });
}

abstain_status abstain_normalize_answer(const char* raw, const char* format, char** out) {
  return guarded([&] {
    require(raw, "raw");
    require(format, "format");
    require(out, "out");
    const auto n = abstain::normalize_answer(raw, abstain::parse_answer_format(format));
    *out = n ? dup(*n) : nullptr;
  });
}

}  // extern "C"
