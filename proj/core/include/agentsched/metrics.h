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
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "agentsched/kvcache.h"
#include "agentsched/scheduler.h"

namespace agentsched {

enum class SpanKind { Compute, Api, Swap, ReadyWait };

std::string_view to_string(SpanKind k);
SpanKind parse_span_kind(std::string_view name);  // throws ParseError

struct GanttEntry {
  std::string request_id;
  int segment_index = 0;
  SpanKind kind = SpanKind::Compute;
  double start = 0.0;
  double end = 0.0;

  bool operator==(const GanttEntry&) const = default;
};

struct RequestRecord {
  std::string id;
  double arrival = 0.0;
  double finish = 0.0;
  double jct = 0.0;
  int segment_count = 0;
  double total_api = 0.0;
  double total_ready_wait = 0.0;
  double total_compute = 0.0;
  double total_swap = 0.0;  // resume delay of swapped caches

  // jct - (wait + compute + api + swap); zero up to rounding.
  double decomposition_residual() const;
};

struct Aggregates {
  double avg_jct = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max_wait = 0.0;
};

struct EvictionAudit {
  double time = 0.0;
  std::string request_id;
  std::int64_t tokens = 0;
};

inline constexpr std::string_view kReportSchema = "agentsched.report/1";

struct RunReport {
  std::string policy;
  std::string cost_model;
  std::string cache_mode;
  std::uint64_t workload_hash = 0;
  std::vector<RequestRecord> per_request;
  Aggregates aggregates;
  std::vector<GanttEntry> gantt;
  std::vector<WasteAudit> waste_audits;
  std::vector<AgingEvent> aging_events;
  std::vector<EvictionAudit> evictions;
  std::size_t memory_audits = 0;
  std::size_t work_conservation_violations = 0;
};

// Nearest-rank percentile, p in [0, 100]. Throws DomainError on empty input.
double percentile(std::vector<double> values, double p);

Aggregates summarize(const std::vector<RequestRecord>& records);

// Mean JCT. Throws DomainError on an empty report.
double avg_jct(const RunReport& report);

// Percent growth of average JCT from the low-load to the high-load run.
double degradation_ratio(double avg_low, double avg_high);
double degradation_ratio(const RunReport& low_load, const RunReport& high_load);

struct ComparisonRow {
  std::string policy;
  double avg_jct = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double delta_pct = 0.0;  // relative to the baseline row
};

struct ComparisonTable {
  std::string baseline;
  std::vector<ComparisonRow> rows;
};

// Rows ordered by policy name. Throws ValidationError when reports come from
// different workloads. A missing baseline falls back to the first row.
ComparisonTable compare(const std::map<std::string, RunReport>& reports,
                        std::string_view baseline = "fcfs");

std::string render_text(const ComparisonTable& table);
nlohmann::ordered_json to_json(const ComparisonTable& table);

nlohmann::ordered_json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);  // throws ParseError

}  // namespace agentsched
