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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agentsched/kvcache.h"
#include "agentsched/metrics.h"
#include "agentsched/predictor.h"
#include "agentsched/scheduler.h"
#include "agentsched/workload.h"

namespace agentsched {

// Serial: one segment at a time, batch members back to back.
// ParallelMax: batch members start together; the batch ends at the longest.
enum class CostModel { Serial, ParallelMax };

std::string_view to_string(CostModel m);
CostModel parse_cost_model(std::string_view name);  // throws ConfigError

enum class EventKind { ApiReturn, SwapDone, BatchSegmentDone, BatchAllDone, Arrival };

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::Arrival;
  std::string request_id;
  std::uint64_t seq = 0;  // insertion order, last tie-break
};

// Strict order: time, kind rank, request id, insertion.
bool event_before(const SimEvent& a, const SimEvent& b);

struct SimConfig {
  CostModel cost_model = CostModel::Serial;
  std::size_t max_batch_size = 0;  // 0 = bounded by memory only
  bool audit_memory = true;        // conservation check after every event
  bool record_gantt = true;
};

struct SegmentTiming {
  double start = 0.0;
  double end = 0.0;
};

struct BatchTiming {
  std::vector<SegmentTiming> segments;  // in batch order
  double all_done = 0.0;
};

// Timing of a batch whose members have the given ground-truth durations.
BatchTiming execute_batch(std::span<const double> durations, double start, CostModel model);

// Replays `workload` to completion. Durations come from `hardware` and the
// segment specs; `policy` and the cache manager see only `predictor`
// outputs. Throws ValidationError for an empty or invalid workload and
// SimulationError (with a state dump) if the engine stops making progress.
RunReport run(const Workload& workload, Policy& policy, const Predictor& predictor,
              const HardwareModel& hardware, const MemoryConfig& memory,
              const SimConfig& config);

// Minimum average JCT over every segment order that respects each request's
// chain, one segment at a time, each started as early as possible. Honors
// arrivals and API durations. Throws SizeError above kOracleMaxSegments.
inline constexpr std::size_t kOracleMaxSegments = 12;
double oracle_optimal(const Workload& workload,
                      const HardwareModel& hardware = HardwareModel::defaults());

}  // namespace agentsched
