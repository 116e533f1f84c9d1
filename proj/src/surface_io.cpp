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

#include "abstain/surface_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "abstain/errors.hpp"
#include "abstain/record_store.hpp"
#include "json.hpp"

namespace abstain {
namespace {

using ojson = nlohmann::ordered_json;

}  // namespace

SurfaceReport make_surface_report(std::span<const AnswerRecord> records,
                                  std::span<const int> budgets,
                                  std::span<const double> thresholds,
                                  std::span<const Scenario> scenarios,
                                  std::string config_hash, std::string generated_at) {
  SurfaceReport report;
  report.surface = build_surface(records, budgets, thresholds, scenarios);
  report.config_hash = std::move(config_hash);
  report.records_digest = records_digest(records);
  report.records = records.size();
  report.generated_at = std::move(generated_at);

  std::map<int, std::vector<AnswerRecord>> by_budget;
  for (int b : report.surface.budgets) by_budget[b];
  for (const auto& r : records) {
    auto it = by_budget.find(r.budget);
    if (it != by_budget.end()) it->second.push_back(r);
  }
  for (int b : report.surface.budgets) {
    for (const auto& s : report.surface.scenarios) {
      report.optimal.push_back({b, s.name, optimal_threshold(by_budget[b], s)});
    }
  }
  return report;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string surface_to_csv(const SurfaceReport& report) {
  std::string out;
  out += "# config_hash=" + report.config_hash + " records_digest=" + report.records_digest + "\n";
  out += "budget,threshold,scenario,n_total,n_answered,n_correct,coverage,answered_accuracy,"
         "mean_utility\n";
  for (const auto& c : report.surface.cells) {
    out += std::to_string(c.budget);
    out += ',';
    out += format_number(c.threshold);
    out += ',';
    out += c.scenario.name;
    out += ',';
    out += std::to_string(c.n_total);
    out += ',';
    out += std::to_string(c.n_answered);
    out += ',';
    out += std::to_string(c.n_correct);
    out += ',';
    out += format_number(c.coverage);
    out += ',';
    out += format_number(c.answered_accuracy);
    out += ',';
    out += format_number(c.mean_utility);
    out += '\n';
  }
  return out;
}

std::string surface_to_json(const SurfaceReport& report) {
  ojson j;
  ojson meta;
  meta["config_hash"] = report.config_hash;
  meta["records_digest"] = report.records_digest;
  meta["records"] = report.records;
  meta["generated_at"] = report.generated_at;
  j["metadata"] = std::move(meta);
  j["budgets"] = report.surface.budgets;
  j["thresholds"] = report.surface.thresholds;
  ojson scenarios = ojson::array();
  for (const auto& s : report.surface.scenarios) {
    scenarios.push_back({{"name", s.name}, {"incorrect_reward", s.incorrect_reward}});
  }
  j["scenarios"] = std::move(scenarios);
  ojson cells = ojson::array();
  for (const auto& c : report.surface.cells) {
    ojson cell;
    cell["budget"] = c.budget;
    cell["threshold"] = c.threshold;
    cell["scenario"] = c.scenario.name;
    cell["n_total"] = c.n_total;
    cell["n_answered"] = c.n_answered;
    cell["n_correct"] = c.n_correct;
    cell["coverage"] = c.coverage;
    cell["answered_accuracy"] = c.answered_accuracy;
    cell["mean_utility"] = c.mean_utility;
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  ojson optimal = ojson::array();
  for (const auto& o : report.optimal) {
    optimal.push_back({{"budget", o.budget},
                       {"scenario", o.scenario},
                       {"threshold", o.optimum.threshold},
                       {"utility", o.optimum.utility},
                       {"coverage", o.optimum.coverage}});
  }
  j["optimal_thresholds"] = std::move(optimal);
  return j.dump(2) + "\n";
}

SurfaceReport surface_from_json(std::string_view json_text) {
  SurfaceReport r;
  try {
    const auto j = nlohmann::json::parse(json_text);
    const auto& meta = j.at("metadata");
    r.config_hash = meta.at("config_hash").get<std::string>();
    r.records_digest = meta.at("records_digest").get<std::string>();
    r.records = meta.at("records").get<std::size_t>();
    r.generated_at = meta.at("generated_at").get<std::string>();
    r.surface.budgets = j.at("budgets").get<std::vector<int>>();
    r.surface.thresholds = j.at("thresholds").get<std::vector<double>>();
    std::map<std::string, Scenario> by_name;
    for (const auto& s : j.at("scenarios")) {
      Scenario sc{s.at("name").get<std::string>(), s.at("incorrect_reward").get<double>()};
      by_name[sc.name] = sc;
      r.surface.scenarios.push_back(sc);
    }
    for (const auto& c : j.at("cells")) {
      SurfaceCell cell;
      cell.budget = c.at("budget").get<int>();
      cell.threshold = c.at("threshold").get<double>();
      const auto name = c.at("scenario").get<std::string>();
      const auto it = by_name.find(name);
      if (it == by_name.end()) throw ParseError("cell names unknown scenario '" + name + "'", 0);
      cell.scenario = it->second;
      cell.n_total = c.at("n_total").get<std::size_t>();
      cell.n_answered = c.at("n_answered").get<std::size_t>();
      cell.n_correct = c.at("n_correct").get<std::size_t>();
      cell.coverage = c.at("coverage").get<double>();
      cell.answered_accuracy = c.at("answered_accuracy").get<double>();
      cell.mean_utility = c.at("mean_utility").get<double>();
      r.surface.cells.push_back(std::move(cell));
    }
    for (const auto& o : j.at("optimal_thresholds")) {
      r.optimal.push_back({o.at("budget").get<int>(), o.at("scenario").get<std::string>(),
                           {o.at("threshold").get<double>(), o.at("utility").get<double>(),
                            o.at("coverage").get<double>()}});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed surface file: ") + e.what(), 0);
  }
  const std::size_t expected =
      r.surface.budgets.size() * r.surface.thresholds.size() * r.surface.scenarios.size();
  if (r.surface.cells.size() != expected) {
    throw ParseError("surface file has " + std::to_string(r.surface.cells.size()) +
                         " cells, grid needs " + std::to_string(expected),
                     0);
  }
  return r;
}

SurfaceReport load_surface(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open surface file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return surface_from_json(ss.str());
}

void write_surface_files(const SurfaceReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto write = [](const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("writing '" + p.string() + "' failed");
  };
  write(out_dir / "surface.csv", surface_to_csv(report));
  write(out_dir / "surface.json", surface_to_json(report));
}

}  // namespace abstain
