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

#include "agentsched/kvcache.h"

#include <cmath>

#include <fmt/format.h>

#include "agentsched/errors.h"

namespace agentsched {

std::string_view to_string(CacheStrategy s) {
  switch (s) {
    case CacheStrategy::Preserve: return "preserve";
    case CacheStrategy::Discard: return "discard";
    case CacheStrategy::Swap: return "swap";
  }
  return "?";
}

std::string_view to_string(CacheMode m) {
  switch (m) {
    case CacheMode::Adaptive: return "adaptive";
    case CacheMode::Preserve: return "preserve";
    case CacheMode::Discard: return "discard";
    case CacheMode::Swap: return "swap";
  }
  return "?";
}

CacheMode parse_cache_mode(std::string_view name) {
  for (auto m : {CacheMode::Adaptive, CacheMode::Preserve, CacheMode::Discard, CacheMode::Swap})
    if (to_string(m) == name) return m;
  throw ConfigError(fmt::format("unknown cache mode '{}'", name));
}

double WasteEstimate::of(CacheStrategy s) const {
  switch (s) {
    case CacheStrategy::Preserve: return preserve;
    case CacheStrategy::Discard: return discard;
    case CacheStrategy::Swap: return swap;
  }
  return preserve;
}

WasteEstimate estimate_waste(double t_api, double c_self, double c_batch, double t_recompute,
                             double t_swap, double bytes_per_token) {
  for (double v : {t_api, c_self, c_batch, t_recompute, t_swap, bytes_per_token})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError(fmt::format("estimate_waste: input {} must be finite and >= 0", v));
  WasteEstimate w;
  w.preserve = t_api * c_self * bytes_per_token;
  w.discard = t_recompute * c_batch * bytes_per_token;
  w.swap = 2.0 * t_swap * c_batch * bytes_per_token;
  w.chosen = CacheStrategy::Swap;
  if (w.discard < w.of(w.chosen)) w.chosen = CacheStrategy::Discard;
  if (w.preserve < w.of(w.chosen)) w.chosen = CacheStrategy::Preserve;
  return w;
}

void MemoryConfig::validate() const {
  if (capacity_tokens <= 0) throw ConfigError("memory: capacity_tokens must be positive");
  if (!(availability > 0.0 && availability <= 1.0))
    throw ConfigError("memory: availability must be in (0, 1]");
  if (!(per_token_bytes >= 0.0)) throw ConfigError("memory: per_token_bytes must be >= 0");
  if (!(swap_bandwidth > 0.0)) throw ConfigError("memory: swap_bandwidth must be positive");
  if (!(watermark > 0.0 && watermark <= 1.0))
    throw ConfigError("memory: watermark must be in (0, 1]");
}

MemoryModel::MemoryModel(const MemoryConfig& config)
    : capacity_(static_cast<std::int64_t>(
          std::floor(static_cast<double>(config.capacity_tokens) * config.availability))) {
  config.validate();
  if (capacity_ <= 0) throw ConfigError("memory: usable capacity rounds to zero tokens");
}

double MemoryModel::utilization() const {
  return static_cast<double>(resident_) / static_cast<double>(capacity_);
}

void MemoryModel::allocate(std::int64_t tokens) {
  if (tokens < 0 || resident_ + tokens > capacity_)
    throw SimulationError(fmt::format("KV allocation of {} tokens with {} free", tokens, free()));
  resident_ += tokens;
}

void MemoryModel::release(std::int64_t tokens) {
  if (tokens < 0 || tokens > resident_)
    throw SimulationError(fmt::format("KV release of {} tokens with {} resident", tokens,
                                      resident_));
  resident_ -= tokens;
}

void MemoryModel::to_host(std::int64_t tokens) {
  release(tokens);
  swapped_ += tokens;
}

void MemoryModel::from_host(std::int64_t tokens) {
  if (tokens > swapped_) throw SimulationError("swap-in of tokens not on host");
  allocate(tokens);
  swapped_ -= tokens;
}

KvCacheManager::KvCacheManager(const MemoryConfig& config, const Predictor& predictor)
    : config_(config), predictor_(predictor), memory_(config) {}

double KvCacheManager::swap_time(std::int64_t tokens) const {
  return static_cast<double>(tokens) / config_.swap_bandwidth;
}

YieldDecision KvCacheManager::on_api_yield(RequestState& state,
                                           std::int64_t waiting_demand_tokens, double now) {
  CacheStrategy strategy = CacheStrategy::Preserve;
  switch (config_.mode) {
    case CacheMode::Preserve: strategy = CacheStrategy::Preserve; break;
    case CacheMode::Discard: strategy = CacheStrategy::Discard; break;
    case CacheMode::Swap: strategy = CacheStrategy::Swap; break;
    case CacheMode::Adaptive: {
      const double util = memory_.utilization();
      if (util < config_.watermark) break;
      WasteAudit a;
      a.time = now;
      a.request_id = state.id();
      a.segment_index = state.current_segment;
      a.utilization = util;
      a.t_api = predictor_.api(state.segment().api_category);
      a.c_self = static_cast<double>(state.kv_tokens);
      a.c_batch = static_cast<double>(waiting_demand_tokens);
      a.t_recompute = predictor_.recompute(state.kv_tokens);
      a.t_swap = swap_time(state.kv_tokens);
      a.estimate = estimate_waste(a.t_api, a.c_self, a.c_batch, a.t_recompute, a.t_swap,
                                  config_.per_token_bytes);
      strategy = a.estimate.chosen;
      audits_.push_back(std::move(a));
      break;
    }
  }

  YieldDecision d{strategy, 0.0};
  if (state.kv_tokens == 0) return d;
  if (strategy == CacheStrategy::Discard) {
    memory_.release(state.kv_tokens);
    state.kv_tokens = 0;
    state.cache_location = CacheLocation::Dropped;
  } else if (strategy == CacheStrategy::Swap) {
    d.swap_out_delay = swap_time(state.kv_tokens);
  }
  return d;
}

void KvCacheManager::complete_swap_out(RequestState& state) {
  memory_.to_host(state.kv_tokens);
  state.cache_location = CacheLocation::Host;
}

double KvCacheManager::resume_cost(const RequestState& state) const {
  switch (state.cache_location) {
    case CacheLocation::Host: return swap_time(state.kv_tokens);
    case CacheLocation::Dropped:
      return predictor_.recompute(state.context_tokens + state.segment().n_in);
    case CacheLocation::GPU:
    case CacheLocation::NoneYet: return 0.0;
  }
  return 0.0;
}

double KvCacheManager::begin_swap_in(RequestState& state) {
  memory_.from_host(state.kv_tokens);
  state.cache_location = CacheLocation::GPU;
  return swap_time(state.kv_tokens);
}

void KvCacheManager::complete_swap_in(RequestState& state) {
  if (state.cache_location != CacheLocation::GPU)
    throw SimulationError(fmt::format("swap-in of {} completed without reservation", state.id()));
}

void KvCacheManager::evict(RequestState& state) {
  if (state.cache_location != CacheLocation::GPU)
    throw SimulationError(fmt::format("evicting non-resident request {}", state.id()));
  memory_.release(state.kv_tokens);
  state.kv_tokens = 0;
  state.cache_location = CacheLocation::Dropped;
}

}  // namespace agentsched
