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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agentsched {

// Functional category of the external call that follows a segment.
enum class ApiCategory { Math, Search, VirtualEnv, Chat, ImageGen, TTS, None };

inline constexpr ApiCategory kAllApiCategories[] = {
    ApiCategory::Math, ApiCategory::Search, ApiCategory::VirtualEnv, ApiCategory::Chat,
    ApiCategory::ImageGen, ApiCategory::TTS, ApiCategory::None};

std::string_view to_string(ApiCategory c);
ApiCategory parse_api_category(std::string_view name);  // throws ConfigError

// One compute episode (prefill + decode) optionally followed by an API call.
struct SegmentSpec {
  int index = 1;           // 1-based ordinal within the parent request
  std::int64_t n_in = 0;   // tokens added by this segment's prefill
  std::int64_t n_gen = 1;  // tokens generated
  ApiCategory api_category = ApiCategory::None;
  double api_duration = 0.0;  // ground-truth seconds of the following call
  // When set, the segment's compute time in abstract units, bypassing the
  // token-based hardware model.
  std::optional<double> direct_compute_time;

  bool operator==(const SegmentSpec&) const = default;
};

struct RequestSpec {
  std::string id;
  double arrival_time = 0.0;
  std::vector<SegmentSpec> segments;

  bool operator==(const RequestSpec&) const = default;
};

using Workload = std::vector<RequestSpec>;

// Throws ValidationError on the first violated invariant.
void validate(const RequestSpec& request);
void validate(const Workload& workload);

// Replay order: (arrival_time, id).
void sort_for_replay(Workload& workload);

// Positive-support distribution parameterized by mean and coefficient of
// variation. cv == 0 is a point mass.
struct LogNormalSpec {
  double mean = 1.0;
  double cv = 0.0;
};

struct CategoryProfile {
  LogNormalSpec first_input_tokens{256.0, 0.5};  // prompt of segment 1
  LogNormalSpec next_input_tokens{64.0, 0.5};    // API response appended later
  LogNormalSpec gen_tokens{48.0, 0.5};
  LogNormalSpec api_latency{1.0, 0.3};
};

struct WorkloadConfig {
  std::uint64_t seed = 0;
  double qps = 1.0;
  double duration = 60.0;
  std::map<ApiCategory, double> category_mix;
  // Probability of a request having k segments, indexed by k.
  std::map<int, double> segment_count_distribution;
  std::map<ApiCategory, CategoryProfile> categories;

  // Long-latency categories oversampled relative to uniform.
  static WorkloadConfig defaults();
};

// Throws ConfigError when probabilities are out of range, a mix does not sum
// to one, qps is negative, or a mixed-in category has no profile.
void validate(const WorkloadConfig& config);

// Poisson arrivals at rate qps over [0, duration]; deterministic in seed.
Workload generate(const WorkloadConfig& config);

// Line-delimited trace: one JSON object per request.
inline constexpr int kTraceSchemaVersion = 1;

std::string serialize_trace(const Workload& workload);
Workload parse_trace(std::string_view text);
Workload load_trace(const std::filesystem::path& path);
void save_trace(const Workload& workload, const std::filesystem::path& path);

// FNV-1a over the canonical serialization; identifies a workload in reports.
std::uint64_t workload_hash(const Workload& workload);

// Two requests at t=0. A: three segments of 3 units each. B: 4, 1, 2 units.
// Zero-duration continuations between segments.
Workload figure2_workload();

}  // namespace agentsched
