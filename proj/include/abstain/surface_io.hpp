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

// Surface export: surface.csv (one row per cell) and surface.json (cells,
// per-budget optimal thresholds and provenance metadata).

#ifndef ABSTAIN_SURFACE_IO_HPP_
#define ABSTAIN_SURFACE_IO_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "abstain/surface.hpp"
#include "abstain/types.hpp"

namespace abstain {

struct OptimalEntry {
  int budget = 0;
  std::string scenario;
  OptimalThreshold optimum;
};

struct SurfaceReport {
  Surface surface;
  std::vector<OptimalEntry> optimal;  // budget-major, then scenario
  std::string config_hash;
  std::string records_digest;
  std::size_t records = 0;
  std::string generated_at;
};

SurfaceReport make_surface_report(std::span<const AnswerRecord> records,
                                  std::span<const int> budgets,
                                  std::span<const double> thresholds,
                                  std::span<const Scenario> scenarios,
                                  std::string config_hash, std::string generated_at);

// Shortest decimal that reads back to the same double.
std::string format_number(double value);

std::string surface_to_csv(const SurfaceReport& report);
std::string surface_to_json(const SurfaceReport& report);
SurfaceReport surface_from_json(std::string_view json_text);
SurfaceReport load_surface(const std::filesystem::path& path);

// Writes <out_dir>/surface.csv and <out_dir>/surface.json.
void write_surface_files(const SurfaceReport& report, const std::filesystem::path& out_dir);

}  // namespace abstain

#endif  // ABSTAIN_SURFACE_IO_HPP_
