/* Copyright 2026 The agentsched Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentsched/metrics.h"
#include "experiment_config.h"

namespace agentsched::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Writes the workload as a line-delimited trace to `out_path`, or to `out`
// when no path is given.
void cmd_generate(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out_path,
                  std::ostream& out);

// Runs one simulation and writes report.json, gantt.jsonl and gantt.csv
// under config.output_dir.
RunReport cmd_run(const ExperimentConfig& config, std::ostream& out);

struct SweepCell {
  std::string policy;
  double qps = 0.0;
  double availability = 0.0;
  std::optional<double> aging;                     // MLFQ cells only
  std::optional<std::vector<double>> thresholds;  // MLFQ cells only
  std::uint64_t seed = 0;
  ExperimentConfig config;

  bool ok = false;
  std::string error;
  Aggregates aggregates;
  std::size_t requests = 0;
};

struct DegradationRow {
  std::string policy;
  double availability = 0.0;
  std::optional<double> aging;
  std::optional<std::vector<double>> thresholds;
  std::uint64_t seed = 0;
  double qps_low = 0.0;
  double qps_high = 0.0;
  double avg_low = 0.0;
  double avg_high = 0.0;
  double degradation_pct = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<DegradationRow> degradation;
};

// Cross product of the sweep axes. Aging and threshold axes apply to
// stateful-mlfq only; other policies get one cell per remaining point.
std::vector<SweepCell> expand_sweep(const ExperimentConfig& config);

// Runs every cell on `config.jobs` threads. Cell failures are recorded, not
// thrown. Writes sweep.csv, sweep.json and degradation.csv.
SweepResult cmd_sweep(const ExperimentConfig& config, std::ostream& out);

std::string sweep_csv(const SweepResult& result);
std::string degradation_csv(const SweepResult& result);
nlohmann::ordered_json sweep_json(const SweepResult& result);

struct GanttOptions {
  int width = 64;
  std::optional<std::filesystem::path> csv;
  std::optional<std::filesystem::path> lanes_dir;  // one CSV per request lane
};

void cmd_gantt(const std::filesystem::path& trace, const GanttOptions& options, std::ostream& out,
               std::ostream& err);

ComparisonTable cmd_compare(const std::vector<std::filesystem::path>& reports,
                            const std::string& baseline,
                            const std::optional<std::filesystem::path>& json_out,
                            std::ostream& out);

// Six significant digits, always with a decimal point ("15.0").
std::string format_seconds(double value);

// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace agentsched::cli
