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
#include <limits>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agentsched/predictor.h"
#include "agentsched/workload.h"

namespace agentsched {

enum class Phase { WaitingReady, Running, ApiWait, SwapIn, Done };
enum class CacheLocation { GPU, Host, Dropped, NoneYet };

std::string_view to_string(Phase p);
std::string_view to_string(CacheLocation c);

// Dynamic lifecycle state of one parent request. Owned by the simulator;
// policies read it and update the queue fields.
struct RequestState {
  const RequestSpec* spec = nullptr;
  Phase phase = Phase::WaitingReady;
  int current_segment = 1;  // 1-based; > k once Done
  int queue_level = 0;
  double attained_tokens_in_level = 0.0;
  // Closed ready-queue intervals only; see ready_wait_at() for the live value.
  double total_ready_wait = 0.0;
  double segment_ready_since = 0.0;
  std::int64_t kv_tokens = 0;       // KV slots held, on GPU or host
  std::int64_t context_tokens = 0;  // context produced by completed segments
  CacheLocation cache_location = CacheLocation::NoneYet;
  double attained_service = 0.0;  // compute seconds received so far

  const std::string& id() const { return spec->id; }
  double arrival() const { return spec->arrival_time; }
  int segment_count() const { return static_cast<int>(spec->segments.size()); }
  const SegmentSpec& segment() const { return spec->segments.at(current_segment - 1); }
  bool on_last_segment() const { return current_segment == segment_count(); }

  // Accumulated ready-queue wait including the currently open interval.
  double ready_wait_at(double now) const;
};

// Global tie-break: earlier arrival, then smaller id.
bool arrives_before(const RequestState& a, const RequestState& b);

struct ReadyEntry {
  RequestState* state = nullptr;
  std::int64_t kv_demand = 0;  // GPU tokens the segment must newly allocate
};

struct BatchLimits {
  std::int64_t memory_free_tokens = 0;
  std::size_t max_segments = 0;  // 0 = unbounded
};

struct BatchPlan {
  struct Item {
    std::string request_id;
    int segment_index = 0;
    std::int64_t kv_tokens = 0;
  };
  std::vector<Item> segments;
  std::int64_t admitted_kv_tokens = 0;

  bool empty() const noexcept { return segments.empty(); }
};

// Admits entries in the given order while their KV demand fits, skipping
// those that do not.
BatchPlan pack_greedy(std::span<const ReadyEntry> ordered, const BatchLimits& limits);

// (wait + t_proc) / t_proc. Throws DomainError when t_proc <= 0.
double hrrn_score(double total_ready_wait, double t_proc);

// Predicted compute times below this are clamped before HRRN division.
inline constexpr double kMinProcTime = 1e-6;

class Policy {
 public:
  virtual ~Policy() = default;
  Policy(const Policy&) = delete;
  Policy& operator=(const Policy&) = delete;

  virtual std::string_view name() const = 0;

  // Throws ProtocolError on a repeated id or a request not at its first
  // ready segment.
  virtual void on_arrival(RequestState& state, double now);
  virtual void on_segment_complete(RequestState& state, double consumed_tokens,
                                   bool yielded_to_api, double now);
  virtual void on_api_return(RequestState& state, double now);

  // Called only while the engine is idle. `ready` holds every ready segment.
  virtual BatchPlan build_next_batch(std::span<const ReadyEntry> ready,
                                     const BatchLimits& limits, double now) = 0;

  // Predicted compute time of the request's current segment, including
  // re-prefill of a discarded context.
  double predicted_t_proc(const RequestState& state) const;

 protected:
  explicit Policy(const Predictor& predictor) : predictor_(predictor) {}
  const Predictor& predictor_;

 private:
  std::set<std::string, std::less<>> seen_;
};

// Baselines order every ready segment by a strict key, then pack.
class FcfsPolicy final : public Policy {
 public:
  explicit FcfsPolicy(const Predictor& p) : Policy(p) {}
  std::string_view name() const override { return "fcfs"; }
  BatchPlan build_next_batch(std::span<const ReadyEntry>, const BatchLimits&, double) override;
};

class SjfSegmentPolicy final : public Policy {
 public:
  explicit SjfSegmentPolicy(const Predictor& p) : Policy(p) {}
  std::string_view name() const override { return "sjf-segment"; }
  BatchPlan build_next_batch(std::span<const ReadyEntry>, const BatchLimits&, double) override;
};

// Oracle: reads the predicted compute of all remaining segments.
class SjfRequestPolicy final : public Policy {
 public:
  explicit SjfRequestPolicy(const Predictor& p) : Policy(p) {}
  std::string_view name() const override { return "sjf-request"; }
  BatchPlan build_next_batch(std::span<const ReadyEntry>, const BatchLimits&, double) override;
  double remaining_service(const RequestState& state) const;
};

class LasPolicy final : public Policy {
 public:
  explicit LasPolicy(const Predictor& p) : Policy(p) {}
  std::string_view name() const override { return "las"; }
  BatchPlan build_next_batch(std::span<const ReadyEntry>, const BatchLimits&, double) override;
};

struct MlfqConfig {
  int queue_count = 6;
  std::vector<double> token_thresholds{128, 256, 384, 512, 640};
  // Response-ratio bound for promoting Q_{m-1} to Q_0. Infinity disables aging.
  double aging_threshold = 5.0;
  int promotion_step = 1;
  // Keep filling the batch from lower levels when memory remains.
  bool spillover = false;

  void validate() const;  // throws ConfigError
};

struct AgingEvent {
  double time = 0.0;
  std::string request_id;
  double response_ratio = 0.0;
};

struct SelectionRecord {
  double time = 0.0;
  std::string request_id;
  int segment_index = 0;
  int queue_level = 0;
  double hrrn = 0.0;
};

class StatefulMlfqPolicy final : public Policy {
 public:
  StatefulMlfqPolicy(const Predictor& p, MlfqConfig config);
  std::string_view name() const override { return "stateful-mlfq"; }

  void on_arrival(RequestState& state, double now) override;
  void on_segment_complete(RequestState& state, double consumed_tokens, bool yielded_to_api,
                           double now) override;
  BatchPlan build_next_batch(std::span<const ReadyEntry> ready, const BatchLimits& limits,
                             double now) override;

  const MlfqConfig& config() const noexcept { return config_; }
  const std::vector<AgingEvent>& aging_events() const noexcept { return aging_; }
  const std::vector<SelectionRecord>& selections() const noexcept { return selections_; }

 private:
  MlfqConfig config_;
  std::vector<AgingEvent> aging_;
  std::vector<SelectionRecord> selections_;
};

inline constexpr std::string_view kPolicyNames[] = {"fcfs", "sjf-segment", "sjf-request", "las",
                                                    "stateful-mlfq"};

// Throws ConfigError for an unknown name.
std::unique_ptr<Policy> make_policy(std::string_view name, const Predictor& predictor,
                                    const MlfqConfig& mlfq = {});

}  // namespace agentsched
