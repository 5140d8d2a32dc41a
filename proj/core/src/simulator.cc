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

#include "agentsched/simulator.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include <fmt/format.h>

#include "agentsched/errors.h"

namespace agentsched {

std::string_view to_string(CostModel m) {
  return m == CostModel::Serial ? "serial" : "parallel-max";
}

CostModel parse_cost_model(std::string_view name) {
  if (name == "serial") return CostModel::Serial;
  if (name == "parallel-max") return CostModel::ParallelMax;
  throw ConfigError(fmt::format("unknown cost model '{}'", name));
}

namespace {

int kind_rank(EventKind k) {
  switch (k) {
    case EventKind::ApiReturn: return 0;
    case EventKind::SwapDone: return 1;
    case EventKind::BatchSegmentDone: return 2;
    case EventKind::BatchAllDone: return 3;
    case EventKind::Arrival: return 4;
  }
  return 5;
}

}  // namespace

bool event_before(const SimEvent& a, const SimEvent& b) {
  if (a.time != b.time) return a.time < b.time;
  if (kind_rank(a.kind) != kind_rank(b.kind)) return kind_rank(a.kind) < kind_rank(b.kind);
  if (a.request_id != b.request_id) return a.request_id < b.request_id;
  return a.seq < b.seq;
}

BatchTiming execute_batch(std::span<const double> durations, double start, CostModel model) {
  BatchTiming t;
  t.all_done = start;
  double cursor = start;
  for (double d : durations) {
    const double s = model == CostModel::Serial ? cursor : start;
    const double e = s + d;
    t.segments.push_back({s, e});
    cursor = e;
    t.all_done = std::max(t.all_done, e);
  }
  return t;
}

namespace {

struct Tracker {
  RequestState state;
  double compute = 0.0;
  double api = 0.0;
  double swap = 0.0;
  double finish = 0.0;
  double api_returned_at = 0.0;
  bool swapping_out = false;
  bool awaiting_resume = false;  // API returned, cache still off-GPU
  double run_start = 0.0;
  double run_duration = 0.0;
};

class Engine {
 public:
  Engine(const Workload& workload, Policy& policy, const Predictor& predictor,
         const HardwareModel& hardware, const MemoryConfig& memory, const SimConfig& config)
      : policy_(policy),
        predictor_(predictor),
        hardware_(hardware),
        config_(config),
        cache_(memory, predictor),
        queue_(event_before_greater) {
    for (const auto& r : workload) {
      Tracker t;
      t.state.spec = &r;
      t.state.segment_ready_since = r.arrival_time;
      trackers_.emplace(r.id, std::move(t));
      push(r.arrival_time, EventKind::Arrival, r.id);
    }
    report_.policy = std::string(policy.name());
    report_.cost_model = std::string(to_string(config.cost_model));
    report_.cache_mode = std::string(to_string(memory.mode));
    report_.workload_hash = workload_hash(workload);
  }

  RunReport run() {
    while (!queue_.empty()) {
      const double now = queue_.top().time;
      while (!queue_.empty() && queue_.top().time == now) {
        SimEvent ev = queue_.top();
        queue_.pop();
        handle(ev, now);
        if (config_.audit_memory) audit_memory();
      }
      try_resume(now);
      if (!batch_active_) schedule(now);
    }
    for (const auto& [id, t] : trackers_)
      if (t.state.phase != Phase::Done)
        throw SimulationError("simulation stalled with unfinished requests\n" + dump_state());
    finish_report();
    return std::move(report_);
  }

 private:
  static bool event_before_greater(const SimEvent& a, const SimEvent& b) {
    return event_before(b, a);
  }

  void push(double t, EventKind kind, const std::string& id) {
    queue_.push({t, kind, id, seq_++});
  }

  void span(const std::string& id, int seg, SpanKind kind, double start, double end) {
    if (config_.record_gantt && end > start) report_.gantt.push_back({id, seg, kind, start, end});
  }

  void handle(const SimEvent& ev, double now) {
    if (ev.kind == EventKind::BatchAllDone) {
      batch_active_ = false;
      return;
    }
    Tracker& t = trackers_.at(ev.request_id);
    switch (ev.kind) {
      case EventKind::Arrival: on_arrival(t, now); break;
      case EventKind::BatchSegmentDone: on_segment_done(t, now); break;
      case EventKind::ApiReturn: on_api_return(t, now); break;
      case EventKind::SwapDone: on_swap_done(t, now); break;
      case EventKind::BatchAllDone: break;
    }
  }

  void on_arrival(Tracker& t, double now) {
    t.state.phase = Phase::WaitingReady;
    t.state.segment_ready_since = now;
    policy_.on_arrival(t.state, now);
    active_.emplace(t.state.id(), &t);
    ready_.emplace(t.state.id(), &t);
  }

  void on_segment_done(Tracker& t, double now) {
    RequestState& s = t.state;
    const SegmentSpec& seg = s.segment();
    t.compute += t.run_duration;
    s.attained_service += t.run_duration;
    s.context_tokens += seg.n_in + seg.n_gen;
    span(s.id(), seg.index, SpanKind::Compute, t.run_start, now);

    const bool last = s.on_last_segment();
    policy_.on_segment_complete(s, predictor_.token_equivalents(seg), !last, now);

    if (last) {
      cache_.memory().release(s.kv_tokens);
      s.kv_tokens = 0;
      s.cache_location = CacheLocation::NoneYet;
      s.phase = Phase::Done;
      s.current_segment += 1;
      t.finish = now;
      active_.erase(s.id());
      return;
    }

    s.phase = Phase::ApiWait;
    t.api += seg.api_duration;
    span(s.id(), seg.index, SpanKind::Api, now, now + seg.api_duration);
    push(now + seg.api_duration, EventKind::ApiReturn, s.id());

    const YieldDecision d = cache_.on_api_yield(s, waiting_demand(), now);
    if (d.strategy == CacheStrategy::Swap && s.kv_tokens > 0) {
      t.swapping_out = true;
      ++pending_swap_outs_;
      push(transfer_end(now, d.swap_out_delay), EventKind::SwapDone, s.id());
    }
  }

  void on_api_return(Tracker& t, double now) {
    RequestState& s = t.state;
    s.current_segment += 1;
    t.api_returned_at = now;
    if (t.swapping_out || s.cache_location == CacheLocation::Host) {
      t.awaiting_resume = true;
      if (!t.swapping_out) resume_queue_.push_back(&t);
      return;
    }
    make_ready(t, now);
  }

  void on_swap_done(Tracker& t, double now) {
    RequestState& s = t.state;
    if (t.swapping_out) {
      t.swapping_out = false;
      --pending_swap_outs_;
      cache_.complete_swap_out(s);
      if (t.awaiting_resume) resume_queue_.push_back(&t);
      return;
    }
    cache_.complete_swap_in(s);
    make_ready(t, now);
  }

  void make_ready(Tracker& t, double now) {
    RequestState& s = t.state;
    if (t.awaiting_resume) {
      t.swap += now - t.api_returned_at;
      span(s.id(), s.current_segment - 1, SpanKind::Swap, t.api_returned_at, now);
      t.awaiting_resume = false;
    }
    s.phase = Phase::WaitingReady;
    s.segment_ready_since = now;
    policy_.on_api_return(s, now);
    ready_.emplace(s.id(), &t);
  }

  double transfer_end(double now, double delay) {
    if (!cache_.config().serialize_swaps) return now + delay;
    const double start = std::max(now, swap_channel_free_);
    swap_channel_free_ = start + delay;
    return swap_channel_free_;
  }

  void try_resume(double now) {
    while (!resume_queue_.empty()) {
      Tracker& t = *resume_queue_.front();
      if (t.state.kv_tokens > cache_.memory().free()) return;
      resume_queue_.pop_front();
      t.state.phase = Phase::SwapIn;
      const double delay = cache_.begin_swap_in(t.state);
      push(transfer_end(now, delay), EventKind::SwapDone, t.state.id());
    }
  }

  std::int64_t kv_demand(const RequestState& s) const {
    const SegmentSpec& seg = s.segment();
    const std::int64_t growth = seg.n_in + seg.n_gen;
    return s.cache_location == CacheLocation::Dropped ? s.context_tokens + growth : growth;
  }

  std::int64_t waiting_demand() const {
    std::int64_t total = 0;
    for (const auto& [id, t] : ready_) total += kv_demand(t->state);
    return total;
  }

  std::vector<ReadyEntry> ready_entries() {
    std::vector<ReadyEntry> out;
    out.reserve(ready_.size());
    for (auto& [id, t] : ready_) out.push_back({&t->state, kv_demand(t->state)});
    return out;
  }

  // Drops one idle resident cache; callers retry batch building after.
  bool evict_one(double now) {
    Tracker* victim = nullptr;
    auto better = [](const Tracker* a, const Tracker* b) {
      const bool a_api = a->state.phase == Phase::ApiWait;
      const bool b_api = b->state.phase == Phase::ApiWait;
      if (a_api != b_api) return a_api;
      return arrives_before(b->state, a->state);
    };
    for (auto& [id, t] : active_) {
      const RequestState& s = t->state;
      if (s.cache_location != CacheLocation::GPU || s.kv_tokens == 0 || t->swapping_out) continue;
      if (s.phase != Phase::ApiWait && s.phase != Phase::WaitingReady) continue;
      if (victim == nullptr || better(t, victim)) victim = t;
    }
    if (victim == nullptr) return false;
    report_.evictions.push_back({now, victim->state.id(), victim->state.kv_tokens});
    cache_.evict(victim->state);
    return true;
  }

  void schedule(double now) {
    if (ready_.empty()) return;
    const BatchLimits limits_base{0, config_.max_batch_size};
    BatchPlan plan;
    for (;;) {
      auto entries = ready_entries();
      BatchLimits limits = limits_base;
      limits.memory_free_tokens = cache_.memory().free();
      plan = policy_.build_next_batch(entries, limits, now);
      if (!plan.empty()) break;
      // Nothing fits. In-flight swap-outs will free memory; otherwise drop
      // an idle cache so the engine cannot stall.
      if (pending_swap_outs_ > 0 || !evict_one(now)) break;
    }
    if (plan.empty()) {
      audit_work_conservation();
      if (pending_swap_outs_ == 0 && resume_queue_.empty() && no_inflight_events()) {
        std::int64_t smallest = std::numeric_limits<std::int64_t>::max();
        for (const auto& [id, t] : ready_) smallest = std::min(smallest, kv_demand(t->state));
        throw SimulationError(fmt::format(
            "no ready segment fits: smallest demand {} tokens, capacity {}\n{}", smallest,
            cache_.memory().capacity(), dump_state()));
      }
      return;
    }
    start_batch(plan, now);
  }

  bool no_inflight_events() const { return queue_.empty(); }

  void start_batch(const BatchPlan& plan, double now) {
    std::vector<Tracker*> members;
    std::vector<double> durations;
    for (const auto& item : plan.segments) {
      Tracker& t = *ready_.at(item.request_id);
      RequestState& s = t.state;
      if (s.current_segment != item.segment_index)
        throw SimulationError(fmt::format("plan names segment {} of {}, current is {}",
                                          item.segment_index, s.id(), s.current_segment));
      const std::int64_t demand = kv_demand(s);
      const std::int64_t recompute =
          s.cache_location == CacheLocation::Dropped ? s.context_tokens : 0;
      cache_.memory().allocate(demand);
      s.kv_tokens += demand;
      s.cache_location = CacheLocation::GPU;
      durations.push_back(hardware_.compute_time(s.segment(), recompute));
      members.push_back(&t);
    }
    const BatchTiming timing = execute_batch(durations, now, config_.cost_model);
    for (std::size_t i = 0; i < members.size(); ++i) {
      Tracker& t = *members[i];
      RequestState& s = t.state;
      const double start = timing.segments[i].start;
      s.total_ready_wait += start - s.segment_ready_since;
      span(s.id(), s.current_segment, SpanKind::ReadyWait, s.segment_ready_since, start);
      s.phase = Phase::Running;
      t.run_start = start;
      t.run_duration = durations[i];
      ready_.erase(s.id());
      push(timing.segments[i].end, EventKind::BatchSegmentDone, s.id());
    }
    batch_active_ = true;
    push(timing.all_done, EventKind::BatchAllDone, "");
  }

  void audit_work_conservation() {
    for (const auto& [id, t] : ready_)
      if (kv_demand(t->state) <= cache_.memory().free()) {
        ++report_.work_conservation_violations;
        return;
      }
  }

  void audit_memory() {
    std::int64_t resident = 0;
    for (const auto& [id, t] : active_)
      if (t->state.cache_location == CacheLocation::GPU) resident += t->state.kv_tokens;
    if (resident != cache_.memory().resident())
      throw SimulationError(fmt::format("KV conservation broken: tracked {} vs resident {}\n{}",
                                        resident, cache_.memory().resident(), dump_state()));
    ++report_.memory_audits;
  }

  std::string dump_state() const {
    std::ostringstream os;
    os << fmt::format("memory: resident={} swapped={} capacity={}; batch_active={}\n",
                      cache_.memory().resident(), cache_.memory().swapped(),
                      cache_.memory().capacity(), batch_active_);
    for (const auto& [id, t] : active_) {
      const auto& s = t->state;
      os << fmt::format("  {} phase={} seg={}/{} level={} kv={} ctx={} cache={}\n", id,
                        to_string(s.phase), s.current_segment, s.segment_count(), s.queue_level,
                        s.kv_tokens, s.context_tokens, to_string(s.cache_location));
    }
    return os.str();
  }

  void finish_report() {
    std::vector<const Tracker*> ordered;
    for (const auto& [id, t] : trackers_) ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(), [](const Tracker* a, const Tracker* b) {
      return arrives_before(a->state, b->state);
    });
    for (const Tracker* t : ordered) {
      RequestRecord r;
      r.id = t->state.id();
      r.arrival = t->state.arrival();
      r.finish = t->finish;
      r.jct = t->finish - r.arrival;
      r.segment_count = t->state.segment_count();
      r.total_api = t->api;
      r.total_ready_wait = t->state.total_ready_wait;
      r.total_compute = t->compute;
      r.total_swap = t->swap;
      report_.per_request.push_back(std::move(r));
    }
    report_.aggregates = summarize(report_.per_request);
    report_.waste_audits = cache_.audits();
    if (const auto* mlfq = dynamic_cast<const StatefulMlfqPolicy*>(&policy_))
      report_.aging_events = mlfq->aging_events();
  }

  Policy& policy_;
  const Predictor& predictor_;
  const HardwareModel& hardware_;
  SimConfig config_;
  KvCacheManager cache_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, bool (*)(const SimEvent&, const SimEvent&)>
      queue_;
  std::uint64_t seq_ = 0;
  std::map<std::string, Tracker> trackers_;
  std::map<std::string, Tracker*> active_;
  std::map<std::string, Tracker*> ready_;
  std::deque<Tracker*> resume_queue_;
  bool batch_active_ = false;
  std::size_t pending_swap_outs_ = 0;
  double swap_channel_free_ = 0.0;
  RunReport report_;
};

}  // namespace

RunReport run(const Workload& workload, Policy& policy, const Predictor& predictor,
              const HardwareModel& hardware, const MemoryConfig& memory,
              const SimConfig& config) {
  if (workload.empty()) throw ValidationError("run: workload is empty");
  validate(workload);
  return Engine(workload, policy, predictor, hardware, memory, config).run();
}

double oracle_optimal(const Workload& workload, const HardwareModel& hardware) {
  if (workload.empty()) throw ValidationError("oracle_optimal: workload is empty");
  validate(workload);
  std::size_t total = 0;
  for (const auto& r : workload) total += r.segments.size();
  if (total > kOracleMaxSegments)
    throw SizeError(fmt::format("oracle_optimal: {} segments exceeds the limit of {}", total,
                                kOracleMaxSegments));

  struct Chain {
    double arrival = 0.0;
    std::vector<double> compute;
    std::vector<double> api;
    std::vector<double> tail;  // compute + API from segment j to the end
  };
  std::vector<Chain> chains;
  for (const auto& r : workload) {
    Chain c;
    c.arrival = r.arrival_time;
    for (const auto& s : r.segments) {
      c.compute.push_back(hardware.compute_time(s));
      c.api.push_back(s.api_duration);
    }
    c.tail.assign(c.compute.size() + 1, 0.0);
    for (std::size_t j = c.compute.size(); j-- > 0;)
      c.tail[j] = c.compute[j] + (j + 1 < c.compute.size() ? c.api[j] : 0.0) + c.tail[j + 1];
    chains.push_back(std::move(c));
  }

  const std::size_t n = chains.size();
  std::vector<std::size_t> next(n, 0);
  std::vector<double> ready(n);
  for (std::size_t i = 0; i < n; ++i) ready[i] = chains[i].arrival;
  double best = std::numeric_limits<double>::infinity();

  auto search = [&](auto&& self, double machine_free, double done_sum) -> void {
    double bound = done_sum;
    bool finished = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (next[i] == chains[i].compute.size()) continue;
      finished = false;
      bound += std::max(ready[i], machine_free) + chains[i].tail[next[i]] - chains[i].arrival;
    }
    if (finished) {
      best = std::min(best, done_sum);
      return;
    }
    if (bound >= best) return;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = next[i];
      if (j == chains[i].compute.size()) continue;
      const double end = std::max(ready[i], machine_free) + chains[i].compute[j];
      const double saved_ready = ready[i];
      const bool last = j + 1 == chains[i].compute.size();
      next[i] = j + 1;
      ready[i] = end + (last ? 0.0 : chains[i].api[j]);
      self(self, end, done_sum + (last ? end - chains[i].arrival : 0.0));
      next[i] = j;
      ready[i] = saved_ready;
    }
  };
  search(search, 0.0, 0.0);
  return best / static_cast<double>(n);
}

}  // namespace agentsched
