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

#include "agentsched/scheduler.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "agentsched/errors.h"

namespace agentsched {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::WaitingReady: return "WaitingReady";
    case Phase::Running: return "Running";
    case Phase::ApiWait: return "ApiWait";
    case Phase::SwapIn: return "SwapIn";
    case Phase::Done: return "Done";
  }
  return "?";
}

std::string_view to_string(CacheLocation c) {
  switch (c) {
    case CacheLocation::GPU: return "GPU";
    case CacheLocation::Host: return "Host";
    case CacheLocation::Dropped: return "Dropped";
    case CacheLocation::NoneYet: return "NoneYet";
  }
  return "?";
}

double RequestState::ready_wait_at(double now) const {
  if (phase != Phase::WaitingReady) return total_ready_wait;
  return total_ready_wait + std::max(0.0, now - segment_ready_since);
}

bool arrives_before(const RequestState& a, const RequestState& b) {
  if (a.arrival() != b.arrival()) return a.arrival() < b.arrival();
  return a.id() < b.id();
}

BatchPlan pack_greedy(std::span<const ReadyEntry> ordered, const BatchLimits& limits) {
  BatchPlan plan;
  std::int64_t free = limits.memory_free_tokens;
  for (const auto& e : ordered) {
    if (limits.max_segments != 0 && plan.segments.size() >= limits.max_segments) break;
    if (e.kv_demand > free) continue;
    free -= e.kv_demand;
    plan.admitted_kv_tokens += e.kv_demand;
    plan.segments.push_back({e.state->id(), e.state->current_segment, e.kv_demand});
  }
  return plan;
}

double hrrn_score(double total_ready_wait, double t_proc) {
  if (!(t_proc > 0.0)) throw DomainError(fmt::format("hrrn_score: t_proc {} <= 0", t_proc));
  return (total_ready_wait + t_proc) / t_proc;
}

void Policy::on_arrival(RequestState& state, double /*now*/) {
  if (state.phase != Phase::WaitingReady || state.current_segment != 1)
    throw ProtocolError(fmt::format("arrival of {} in phase {} at segment {}", state.id(),
                                    to_string(state.phase), state.current_segment));
  if (!seen_.insert(state.id()).second)
    throw ProtocolError(fmt::format("duplicate arrival of request {}", state.id()));
}

void Policy::on_segment_complete(RequestState&, double, bool, double) {}

void Policy::on_api_return(RequestState&, double) {}

double Policy::predicted_t_proc(const RequestState& state) const {
  const std::int64_t recompute =
      state.cache_location == CacheLocation::Dropped ? state.context_tokens : 0;
  return predictor_.compute(*state.spec, state.segment(), recompute);
}

namespace {

template <typename Key>
BatchPlan sort_and_pack(std::span<const ReadyEntry> ready, const BatchLimits& limits,
                        Key&& key) {
  struct Keyed {
    ReadyEntry entry;
    double key;
  };
  std::vector<Keyed> items;
  items.reserve(ready.size());
  for (const auto& e : ready) items.push_back({e, key(*e.state)});
  std::sort(items.begin(), items.end(), [](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key < b.key;
    return arrives_before(*a.entry.state, *b.entry.state);
  });
  std::vector<ReadyEntry> ordered;
  ordered.reserve(items.size());
  for (const auto& k : items) ordered.push_back(k.entry);
  return pack_greedy(ordered, limits);
}

}  // namespace

// Segments in the order they entered the ready queue.
BatchPlan FcfsPolicy::build_next_batch(std::span<const ReadyEntry> ready,
                                       const BatchLimits& limits, double) {
  return sort_and_pack(ready, limits, [](const RequestState& s) { return s.segment_ready_since; });
}

BatchPlan SjfSegmentPolicy::build_next_batch(std::span<const ReadyEntry> ready,
                                             const BatchLimits& limits, double) {
  return sort_and_pack(ready, limits,
                       [this](const RequestState& s) { return predicted_t_proc(s); });
}

double SjfRequestPolicy::remaining_service(const RequestState& state) const {
  double total = predicted_t_proc(state);
  for (int j = state.current_segment + 1; j <= state.segment_count(); ++j)
    total += predictor_.compute(*state.spec, state.spec->segments[j - 1]);
  return total;
}

BatchPlan SjfRequestPolicy::build_next_batch(std::span<const ReadyEntry> ready,
                                             const BatchLimits& limits, double) {
  return sort_and_pack(ready, limits,
                       [this](const RequestState& s) { return remaining_service(s); });
}

BatchPlan LasPolicy::build_next_batch(std::span<const ReadyEntry> ready,
                                      const BatchLimits& limits, double) {
  return sort_and_pack(ready, limits, [](const RequestState& s) { return s.attained_service; });
}

void MlfqConfig::validate() const {
  if (queue_count < 2) throw ConfigError("mlfq: queue_count must be >= 2");
  if (token_thresholds.size() != static_cast<std::size_t>(queue_count - 1))
    throw ConfigError(fmt::format("mlfq: {} queues need {} token thresholds, got {}",
                                  queue_count, queue_count - 1, token_thresholds.size()));
  for (std::size_t i = 0; i < token_thresholds.size(); ++i) {
    if (!(token_thresholds[i] > 0.0)) throw ConfigError("mlfq: thresholds must be positive");
    if (i > 0 && !(token_thresholds[i] > token_thresholds[i - 1]))
      throw ConfigError("mlfq: thresholds must be strictly increasing");
  }
  if (!(aging_threshold > 1.0)) throw ConfigError("mlfq: aging threshold must be > 1");
  if (promotion_step < 1) throw ConfigError("mlfq: promotion_step must be >= 1");
}

StatefulMlfqPolicy::StatefulMlfqPolicy(const Predictor& p, MlfqConfig config)
    : Policy(p), config_(std::move(config)) {
  config_.validate();
}

void StatefulMlfqPolicy::on_arrival(RequestState& state, double now) {
  Policy::on_arrival(state, now);
  state.queue_level = 0;
  state.attained_tokens_in_level = 0.0;
  state.segment_ready_since = now;
}

void StatefulMlfqPolicy::on_segment_complete(RequestState& state, double consumed_tokens,
                                             bool yielded_to_api, double /*now*/) {
  state.attained_tokens_in_level += consumed_tokens;
  const int bottom = config_.queue_count - 1;
  const bool has_quota = state.queue_level < bottom;
  const double quota = has_quota ? config_.token_thresholds[state.queue_level]
                                 : std::numeric_limits<double>::infinity();
  if (has_quota && state.attained_tokens_in_level >= quota) {
    state.queue_level += 1;
    state.attained_tokens_in_level = 0.0;
  } else if (yielded_to_api) {
    state.queue_level = std::max(0, state.queue_level - config_.promotion_step);
    state.attained_tokens_in_level = 0.0;
  }
}

BatchPlan StatefulMlfqPolicy::build_next_batch(std::span<const ReadyEntry> ready,
                                               const BatchLimits& limits, double now) {
  const int bottom = config_.queue_count - 1;

  // Aging: only the lowest queue is inspected, and it jumps straight to Q_0.
  if (std::isfinite(config_.aging_threshold)) {
    for (const auto& e : ready) {
      RequestState& s = *e.state;
      if (s.queue_level != bottom) continue;
      const double t_proc = std::max(kMinProcTime, predicted_t_proc(s));
      const double ratio = hrrn_score(s.ready_wait_at(now), t_proc);
      if (ratio > config_.aging_threshold) {
        s.queue_level = 0;
        s.attained_tokens_in_level = 0.0;
        aging_.push_back({now, s.id(), ratio});
      }
    }
  }

  BatchPlan plan;
  BatchLimits remaining = limits;
  for (int level = 0; level <= bottom; ++level) {
    struct Scored {
      ReadyEntry entry;
      double score;
    };
    std::vector<Scored> candidates;
    for (const auto& e : ready)
      if (e.state->queue_level == level) {
        const double t_proc = std::max(kMinProcTime, predicted_t_proc(*e.state));
        candidates.push_back({e, hrrn_score(e.state->ready_wait_at(now), t_proc)});
      }
    if (candidates.empty()) continue;

    std::sort(candidates.begin(), candidates.end(), [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return arrives_before(*a.entry.state, *b.entry.state);
    });
    std::vector<ReadyEntry> ordered;
    for (const auto& c : candidates) ordered.push_back(c.entry);
    BatchPlan level_plan = pack_greedy(ordered, remaining);

    for (const auto& item : level_plan.segments) {
      const auto it = std::find_if(candidates.begin(), candidates.end(), [&](const Scored& c) {
        return c.entry.state->id() == item.request_id;
      });
      selections_.push_back({now, item.request_id, item.segment_index, level, it->score});
      plan.segments.push_back(item);
    }
    plan.admitted_kv_tokens += level_plan.admitted_kv_tokens;
    remaining.memory_free_tokens -= level_plan.admitted_kv_tokens;
    if (remaining.max_segments != 0) {
      remaining.max_segments -= level_plan.segments.size();
      if (remaining.max_segments == 0) break;
    }
    // A level whose segments all exceed free memory yields to the next one.
    if (!plan.empty() && !config_.spillover) break;
  }
  return plan;
}

std::unique_ptr<Policy> make_policy(std::string_view name, const Predictor& predictor,
                                    const MlfqConfig& mlfq) {
  if (name == "fcfs") return std::make_unique<FcfsPolicy>(predictor);
  if (name == "sjf-segment") return std::make_unique<SjfSegmentPolicy>(predictor);
  if (name == "sjf-request") return std::make_unique<SjfRequestPolicy>(predictor);
  if (name == "las") return std::make_unique<LasPolicy>(predictor);
  if (name == "stateful-mlfq") return std::make_unique<StatefulMlfqPolicy>(predictor, mlfq);
  throw ConfigError(fmt::format("unknown policy '{}'", name));
}

}  // namespace agentsched
