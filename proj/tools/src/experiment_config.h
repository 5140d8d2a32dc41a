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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentsched/kvcache.h"
#include "agentsched/predictor.h"
#include "agentsched/scheduler.h"
#include "agentsched/simulator.h"
#include "agentsched/workload.h"

namespace agentsched::cli {

struct SweepAxes {
  std::vector<std::string> policies{"fcfs", "sjf-segment", "sjf-request", "las",
                                    "stateful-mlfq"};
  std::vector<double> qps{1.0, 3.0, 5.0};
  std::vector<double> availability{0.3, 0.5, 0.7, 0.9};
  std::vector<double> aging{5.0};
  std::vector<std::vector<double>> thresholds{{128, 256, 384, 512, 640}};
  std::vector<std::uint64_t> seeds{1};
  // Cache mode for every policy except stateful-mlfq; empty = memory.mode.
  std::string baseline_cache_mode;
};

struct ExperimentConfig {
  WorkloadConfig workload = WorkloadConfig::defaults();
  std::optional<std::filesystem::path> trace;
  std::string example;  // "" or "figure2"

  std::string policy = "stateful-mlfq";
  MlfqConfig mlfq;
  MemoryConfig memory;
  SimConfig sim;

  std::vector<ProfilePoint> prefill_profile = PrefillProfile::defaults().points();
  double decode_latency = DecodeModel{}.avg_decode_latency_per_token;
  std::map<ApiCategory, double> api_means = ApiLatencyTable::defaults().means();
  PredictorConfig predictor;

  SweepAxes sweep;
  int jobs = 1;
  std::filesystem::path output_dir = "agentsched-out";

  Predictor make_predictor() const;
  // Throws ConfigError (or ValidationError for sweep axes).
  void validate() const;
};

// Layers applied in order: defaults, example preset, file, overrides.
void apply_example(ExperimentConfig& config, std::string_view name);
void load_ini(ExperimentConfig& config, const std::filesystem::path& path);
// `assignment` is "section.key=value".
void apply_override(ExperimentConfig& config, std::string_view assignment);
void set_value(ExperimentConfig& config, std::string_view key, std::string_view value);

// Every key with its resolved value, keyed "section.key".
nlohmann::ordered_json resolved(const ExperimentConfig& config);
std::vector<std::string> config_keys();

// Workload named by the config: the example, the trace, or a generated one.
Workload load_workload(const ExperimentConfig& config);

double parse_double(std::string_view text, std::string_view what);
std::vector<double> parse_double_list(std::string_view text, std::string_view what);

}  // namespace agentsched::cli
