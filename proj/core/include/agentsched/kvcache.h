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
#include <string>
#include <string_view>
#include <vector>

#include "agentsched/predictor.h"
#include "agentsched/scheduler.h"

namespace agentsched {

enum class CacheStrategy { Preserve, Discard, Swap };

// Adaptive switches on the watermark; the others apply one strategy always.
enum class CacheMode { Adaptive, Preserve, Discard, Swap };

std::string_view to_string(CacheStrategy s);
std::string_view to_string(CacheMode m);
CacheMode parse_cache_mode(std::string_view name);  // throws ConfigError

// Memory-time waste of each strategy in token-seconds times bytes/token.
struct WasteEstimate {
  double preserve = 0.0;
  double discard = 0.0;
  double swap = 0.0;
  CacheStrategy chosen = CacheStrategy::Preserve;

  double of(CacheStrategy s) const;
};

// preserve = t_api * c_self * M
// discard  = t_recompute * c_batch * M
// swap     = 2 * t_swap * c_batch * M
// Minimum wins; equal minima resolve Swap, then Discard, then Preserve.
// Throws DomainError on a negative or non-finite input.
WasteEstimate estimate_waste(double t_api, double c_self, double c_batch, double t_recompute,
                             double t_swap, double bytes_per_token);

struct MemoryConfig {
  std::int64_t capacity_tokens = 131072;  // ~60 GB of KV for a 6B model
  double availability = 1.0;             // usable fraction of capacity_tokens
  double per_token_bytes = 458752.0;     // M
  double swap_bandwidth = 50000.0;       // tokens/second, each direction
  double watermark = 0.9;                // fraction of usable capacity
  CacheMode mode = CacheMode::Adaptive;
  bool serialize_swaps = false;          // one FIFO transfer channel

  void validate() const;  // throws ConfigError
};

// GPU KV occupancy in tokens. Host-side usage is tracked, never bounded.
class MemoryModel {
 public:
  explicit MemoryModel(const MemoryConfig& config);

  std::int64_t capacity() const noexcept { return capacity_; }
  std::int64_t resident() const noexcept { return resident_; }
  std::int64_t swapped() const noexcept { return swapped_; }
  std::int64_t free() const noexcept { return capacity_ - resident_; }
  double utilization() const;

  void allocate(std::int64_t tokens);  // throws SimulationError past capacity
  void release(std::int64_t tokens);
  void to_host(std::int64_t tokens);   // GPU -> host
  void from_host(std::int64_t tokens); // host -> GPU

 private:
  std::int64_t capacity_;
  std::int64_t resident_ = 0;
  std::int64_t swapped_ = 0;
};

struct WasteAudit {
  double time = 0.0;
  std::string request_id;
  int segment_index = 0;
  double utilization = 0.0;
  double t_api = 0.0;
  double c_self = 0.0;
  double c_batch = 0.0;
  double t_recompute = 0.0;
  double t_swap = 0.0;
  WasteEstimate estimate;
};

struct YieldDecision {
  CacheStrategy strategy = CacheStrategy::Preserve;
  double swap_out_delay = 0.0;  // nonzero only for Swap
};

// Chooses what happens to a request's KV cache while it waits on an API.
class KvCacheManager {
 public:
  KvCacheManager(const MemoryConfig& config, const Predictor& predictor);

  // Below the watermark (adaptive mode) the cache is preserved. Otherwise
  // the cheapest strategy by estimate_waste is applied. Discard frees GPU
  // tokens immediately; Swap keeps them until complete_swap_out().
  YieldDecision on_api_yield(RequestState& state, std::int64_t waiting_demand_tokens,
                             double now);

  void complete_swap_out(RequestState& state);

  // Extra latency before the request's next segment can run: 0 when the
  // cache is on GPU, the transfer time when it is on host, and the predicted
  // full re-prefill when it was discarded.
  double resume_cost(const RequestState& state) const;

  // Reserves GPU slots and starts the host->GPU copy; returns its duration.
  // The cache counts as GPU-resident from here on. Caller must check
  // memory().free() first.
  double begin_swap_in(RequestState& state);
  void complete_swap_in(RequestState& state);

  // Drops a resident, idle cache to free memory for a stuck engine.
  void evict(RequestState& state);

  double swap_time(std::int64_t tokens) const;

  MemoryModel& memory() noexcept { return memory_; }
  const MemoryModel& memory() const noexcept { return memory_; }
  const MemoryConfig& config() const noexcept { return config_; }
  const std::vector<WasteAudit>& audits() const noexcept { return audits_; }

 private:
  MemoryConfig config_;
  const Predictor& predictor_;
  MemoryModel memory_;
  std::vector<WasteAudit> audits_;
};

}  // namespace agentsched
