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
#include <map>
#include <vector>

#include "agentsched/workload.h"

namespace agentsched {

struct ProfilePoint {
  std::int64_t input_length = 0;  // tokens
  double latency = 0.0;           // seconds
};

// Offline-profiled prefill latency table. Input lengths strictly increasing,
// latencies positive and non-decreasing, at least two points.
class PrefillProfile {
 public:
  explicit PrefillProfile(std::vector<ProfilePoint> points);

  // A 6B-class model on one datacenter GPU; repository defaults.
  static PrefillProfile defaults();

  const std::vector<ProfilePoint>& points() const noexcept { return points_; }

 private:
  std::vector<ProfilePoint> points_;
};

struct DecodeModel {
  double avg_decode_latency_per_token = 0.02;  // seconds/token
};

class ApiLatencyTable {
 public:
  ApiLatencyTable() = default;
  explicit ApiLatencyTable(std::map<ApiCategory, double> means);

  // Math 9e-5 s, ImageGen 20.03 s and Chat 28.6 s are measured category
  // means. Search 3.0 s, VirtualEnv 0.5 s and TTS 10.0 s are placeholders.
  static ApiLatencyTable defaults();

  void set(ApiCategory category, double mean_seconds);
  const std::map<ApiCategory, double>& means() const noexcept { return means_; }

 private:
  friend double predict_api(const ApiLatencyTable&, ApiCategory);
  std::map<ApiCategory, double> means_;
};

// Piecewise-linear through (0, 0) and the profile knots, extrapolated
// linearly from the last interval. Throws DomainError for n_in < 0.
double predict_prefill(const PrefillProfile& profile, std::int64_t n_in);

// f_prefill(n_in) + n_gen * per-token decode latency, or the segment's
// direct_compute_time when present.
double predict_compute(const PrefillProfile& profile, const DecodeModel& decode,
                       const SegmentSpec& seg);

// Category mean; None is always 0. Throws ConfigError for a missing entry.
double predict_api(const ApiLatencyTable& table, ApiCategory category);

// Timing of the simulated engine. The simulator draws execution durations
// from here; the predictor holds its own copy for estimates.
class HardwareModel {
 public:
  HardwareModel(PrefillProfile profile, DecodeModel decode);
  static HardwareModel defaults();

  double prefill(std::int64_t n_in) const { return predict_prefill(profile_, n_in); }

  // Compute time of `seg`. A non-zero `recompute_context` means the cached
  // context was discarded and must be prefilled again with the new input.
  double compute_time(const SegmentSpec& seg, std::int64_t recompute_context = 0) const;

  // Work in decode-token equivalents: n_gen + f_prefill(n_in) / decode latency.
  double token_equivalents(const SegmentSpec& seg) const;

  const PrefillProfile& profile() const noexcept { return profile_; }
  const DecodeModel& decode() const noexcept { return decode_; }

 private:
  PrefillProfile profile_;
  DecodeModel decode_;
};

struct PredictorConfig {
  // Sigma of a multiplicative lognormal error on compute estimates; 0 is the
  // exact segment-level oracle.
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
};

// Estimates consumed by policies and the cache manager. Takes only the
// current segment, never later segments of the same request.
class Predictor {
 public:
  Predictor(HardwareModel hardware, ApiLatencyTable api, PredictorConfig config = {});
  static Predictor defaults();

  double compute(const RequestSpec& request, const SegmentSpec& seg,
                 std::int64_t recompute_context = 0) const;
  double api(ApiCategory category) const { return predict_api(api_, category); }
  double recompute(std::int64_t context_tokens) const { return hardware_.prefill(context_tokens); }
  double token_equivalents(const SegmentSpec& seg) const {
    return hardware_.token_equivalents(seg);
  }

  const HardwareModel& hardware() const noexcept { return hardware_; }
  const ApiLatencyTable& api_table() const noexcept { return api_; }
  const PredictorConfig& config() const noexcept { return config_; }

 private:
  HardwareModel hardware_;
  ApiLatencyTable api_;
  PredictorConfig config_;
};

}  // namespace agentsched
