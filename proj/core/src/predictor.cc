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

#include "agentsched/predictor.h"

#include <cmath>
#include <functional>
#include <random>

#include <fmt/format.h>

#include "agentsched/errors.h"

namespace agentsched {

PrefillProfile::PrefillProfile(std::vector<ProfilePoint> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw ConfigError("prefill profile needs at least two points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (p.input_length < 1) throw ConfigError("prefill profile lengths must be >= 1");
    if (!(p.latency > 0.0) || !std::isfinite(p.latency))
      throw ConfigError("prefill profile latencies must be positive");
    if (i > 0) {
      if (p.input_length <= points_[i - 1].input_length)
        throw ConfigError("prefill profile lengths must be strictly increasing");
      if (p.latency < points_[i - 1].latency)
        throw ConfigError("prefill profile latencies must be non-decreasing");
    }
  }
}

PrefillProfile PrefillProfile::defaults() {
  return PrefillProfile({{128, 0.012},
                         {512, 0.030},
                         {1024, 0.058},
                         {2048, 0.120},
                         {4096, 0.260}});
}

ApiLatencyTable::ApiLatencyTable(std::map<ApiCategory, double> means) {
  for (const auto& [c, m] : means) set(c, m);
}

ApiLatencyTable ApiLatencyTable::defaults() {
  return ApiLatencyTable({{ApiCategory::Math, 9e-5},
                          {ApiCategory::ImageGen, 20.03},
                          {ApiCategory::Chat, 28.6},
                          {ApiCategory::Search, 3.0},
                          {ApiCategory::VirtualEnv, 0.5},
                          {ApiCategory::TTS, 10.0},
                          {ApiCategory::None, 0.0}});
}

void ApiLatencyTable::set(ApiCategory category, double mean_seconds) {
  if (!(mean_seconds >= 0.0) || !std::isfinite(mean_seconds))
    throw ConfigError(fmt::format("API mean for {} must be >= 0", to_string(category)));
  if (category == ApiCategory::None && mean_seconds != 0.0)
    throw ConfigError("API mean for None must be 0");
  means_[category] = mean_seconds;
}

double predict_prefill(const PrefillProfile& profile, std::int64_t n_in) {
  if (n_in < 0) throw DomainError("predict_prefill: n_in must be >= 0");
  if (n_in == 0) return 0.0;
  const auto& pts = profile.points();
  const double x = static_cast<double>(n_in);

  auto lerp = [x](double x0, double y0, double x1, double y1) {
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
  };

  if (n_in <= pts.front().input_length)
    return lerp(0.0, 0.0, static_cast<double>(pts.front().input_length), pts.front().latency);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (n_in <= pts[i].input_length) {
      if (n_in == pts[i].input_length) return pts[i].latency;
      return lerp(static_cast<double>(pts[i - 1].input_length), pts[i - 1].latency,
                  static_cast<double>(pts[i].input_length), pts[i].latency);
    }
  }
  const auto& a = pts[pts.size() - 2];
  const auto& b = pts.back();
  return lerp(static_cast<double>(a.input_length), a.latency,
              static_cast<double>(b.input_length), b.latency);
}

double predict_compute(const PrefillProfile& profile, const DecodeModel& decode,
                       const SegmentSpec& seg) {
  if (seg.direct_compute_time) return *seg.direct_compute_time;
  return predict_prefill(profile, seg.n_in) +
         static_cast<double>(seg.n_gen) * decode.avg_decode_latency_per_token;
}

double predict_api(const ApiLatencyTable& table, ApiCategory category) {
  if (category == ApiCategory::None) return 0.0;
  auto it = table.means_.find(category);
  if (it == table.means_.end())
    throw ConfigError(fmt::format("no API latency entry for {}", to_string(category)));
  return it->second;
}

HardwareModel::HardwareModel(PrefillProfile profile, DecodeModel decode)
    : profile_(std::move(profile)), decode_(decode) {
  if (!(decode_.avg_decode_latency_per_token > 0.0))
    throw ConfigError("avg_decode_latency_per_token must be positive");
}

HardwareModel HardwareModel::defaults() {
  return HardwareModel(PrefillProfile::defaults(), DecodeModel{});
}

double HardwareModel::compute_time(const SegmentSpec& seg, std::int64_t recompute_context) const {
  if (seg.direct_compute_time) return *seg.direct_compute_time + prefill(recompute_context);
  return prefill(recompute_context + seg.n_in) +
         static_cast<double>(seg.n_gen) * decode_.avg_decode_latency_per_token;
}

double HardwareModel::token_equivalents(const SegmentSpec& seg) const {
  const double dec = decode_.avg_decode_latency_per_token;
  if (seg.direct_compute_time) return *seg.direct_compute_time / dec;
  return static_cast<double>(seg.n_gen) + prefill(seg.n_in) / dec;
}

Predictor::Predictor(HardwareModel hardware, ApiLatencyTable api, PredictorConfig config)
    : hardware_(std::move(hardware)), api_(std::move(api)), config_(config) {
  if (!(config_.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
}

Predictor Predictor::defaults() {
  return Predictor(HardwareModel::defaults(), ApiLatencyTable::defaults());
}

double Predictor::compute(const RequestSpec& request, const SegmentSpec& seg,
                          std::int64_t recompute_context) const {
  const double exact = hardware_.compute_time(seg, recompute_context);
  if (config_.noise_sigma == 0.0) return exact;
  // Same (request, segment) always draws the same error.
  std::uint64_t key = config_.noise_seed ^ (std::hash<std::string>{}(request.id) * 0x9E3779B97F4A7C15ULL);
  key ^= static_cast<std::uint64_t>(seg.index) + 0x632BE59BD9B4E019ULL + (key << 6) + (key >> 2);
  std::mt19937_64 rng(key);
  std::normal_distribution<double> z(0.0, 1.0);
  return exact * std::exp(config_.noise_sigma * z(rng));
}

}  // namespace agentsched
