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

#include "agentsched/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "agentsched/errors.h"

namespace agentsched {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(SpanKind k) {
  switch (k) {
    case SpanKind::Compute: return "compute";
    case SpanKind::Api: return "api";
    case SpanKind::Swap: return "swap";
    case SpanKind::ReadyWait: return "ready-wait";
  }
  return "?";
}

SpanKind parse_span_kind(std::string_view name) {
  for (auto k : {SpanKind::Compute, SpanKind::Api, SpanKind::Swap, SpanKind::ReadyWait})
    if (to_string(k) == name) return k;
  throw ParseError(fmt::format("unknown span kind '{}'", name));
}

double RequestRecord::decomposition_residual() const {
  return jct - (total_ready_wait + total_compute + total_api + total_swap);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("percentile of empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw DomainError("percentile outside [0, 100]");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

Aggregates summarize(const std::vector<RequestRecord>& records) {
  Aggregates a;
  if (records.empty()) return a;
  std::vector<double> jcts;
  jcts.reserve(records.size());
  for (const auto& r : records) {
    jcts.push_back(r.jct);
    a.max_wait = std::max(a.max_wait, r.total_ready_wait);
  }
  a.avg_jct = std::accumulate(jcts.begin(), jcts.end(), 0.0) / static_cast<double>(jcts.size());
  a.p50 = percentile(jcts, 50);
  a.p95 = percentile(jcts, 95);
  a.p99 = percentile(jcts, 99);
  return a;
}

double avg_jct(const RunReport& report) {
  if (report.per_request.empty()) throw DomainError("avg_jct of empty report");
  double sum = 0.0;
  for (const auto& r : report.per_request) sum += r.jct;
  return sum / static_cast<double>(report.per_request.size());
}

double degradation_ratio(double avg_low, double avg_high) {
  if (avg_low == 0.0) throw DomainError("degradation_ratio: low-load average JCT is 0");
  return (avg_high - avg_low) / avg_low * 100.0;
}

double degradation_ratio(const RunReport& low_load, const RunReport& high_load) {
  return degradation_ratio(avg_jct(low_load), avg_jct(high_load));
}

ComparisonTable compare(const std::map<std::string, RunReport>& reports,
                        std::string_view baseline) {
  if (reports.empty()) throw ValidationError("compare: no reports");
  const auto hash = reports.begin()->second.workload_hash;
  for (const auto& [name, r] : reports)
    if (r.workload_hash != hash)
      throw ValidationError(fmt::format("compare: report '{}' ran a different workload", name));

  ComparisonTable t;
  t.baseline = reports.contains(std::string(baseline)) ? std::string(baseline)
                                                      : reports.begin()->first;
  const double base = avg_jct(reports.at(t.baseline));
  for (const auto& [name, r] : reports) {
    ComparisonRow row;
    row.policy = name;
    row.avg_jct = avg_jct(r);
    const auto agg = summarize(r.per_request);
    row.p50 = agg.p50;
    row.p95 = agg.p95;
    row.p99 = agg.p99;
    row.delta_pct = base == 0.0 ? 0.0 : (row.avg_jct - base) / base * 100.0;
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string render_text(const ComparisonTable& table) {
  std::string out = fmt::format("{:<16} {:>12} {:>12} {:>12} {:>12} {:>10}\n", "policy",
                                "avg_jct", "p50", "p95", "p99", "delta%");
  for (const auto& r : table.rows)
    out += fmt::format("{:<16} {:>12.4f} {:>12.4f} {:>12.4f} {:>12.4f} {:>+10.2f}\n", r.policy,
                       r.avg_jct, r.p50, r.p95, r.p99, r.delta_pct);
  out += fmt::format("baseline: {}\n", table.baseline);
  return out;
}

ordered_json to_json(const ComparisonTable& table) {
  ordered_json j;
  j["schema"] = "agentsched.compare/1";
  j["baseline"] = table.baseline;
  j["rows"] = ordered_json::array();
  for (const auto& r : table.rows)
    j["rows"].push_back({{"policy", r.policy},
                         {"avg_jct", r.avg_jct},
                         {"p50", r.p50},
                         {"p95", r.p95},
                         {"p99", r.p99},
                         {"delta_pct", r.delta_pct}});
  return j;
}

namespace {

ordered_json estimate_json(const WasteEstimate& w) {
  return {{"preserve", w.preserve},
          {"discard", w.discard},
          {"swap", w.swap},
          {"chosen", to_string(w.chosen)}};
}

}  // namespace

ordered_json to_json(const RunReport& report) {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["policy"] = report.policy;
  j["cost_model"] = report.cost_model;
  j["cache_mode"] = report.cache_mode;
  j["workload_hash"] = fmt::format("{:016x}", report.workload_hash);
  const auto& a = report.aggregates;
  j["aggregates"] = {{"avg_jct", a.avg_jct}, {"p50", a.p50},           {"p95", a.p95},
                     {"p99", a.p99},         {"max_wait", a.max_wait}};
  j["per_request"] = ordered_json::array();
  for (const auto& r : report.per_request)
    j["per_request"].push_back({{"id", r.id},
                                {"arrival", r.arrival},
                                {"finish", r.finish},
                                {"jct", r.jct},
                                {"segment_count", r.segment_count},
                                {"total_api", r.total_api},
                                {"total_ready_wait", r.total_ready_wait},
                                {"total_compute", r.total_compute},
                                {"total_swap", r.total_swap}});
  j["gantt"] = ordered_json::array();
  for (const auto& g : report.gantt)
    j["gantt"].push_back({{"request_id", g.request_id},
                          {"segment_index", g.segment_index},
                          {"kind", to_string(g.kind)},
                          {"start", g.start},
                          {"end", g.end}});
  auto& audits = j["audits"];
  audits["memory_audits"] = report.memory_audits;
  audits["work_conservation_violations"] = report.work_conservation_violations;
  audits["waste"] = ordered_json::array();
  for (const auto& w : report.waste_audits)
    audits["waste"].push_back({{"time", w.time},
                               {"request_id", w.request_id},
                               {"segment_index", w.segment_index},
                               {"utilization", w.utilization},
                               {"t_api", w.t_api},
                               {"c_self", w.c_self},
                               {"c_batch", w.c_batch},
                               {"t_recompute", w.t_recompute},
                               {"t_swap", w.t_swap},
                               {"estimate", estimate_json(w.estimate)}});
  audits["aging"] = ordered_json::array();
  for (const auto& e : report.aging_events)
    audits["aging"].push_back(
        {{"time", e.time}, {"request_id", e.request_id}, {"response_ratio", e.response_ratio}});
  audits["evictions"] = ordered_json::array();
  for (const auto& e : report.evictions)
    audits["evictions"].push_back(
        {{"time", e.time}, {"request_id", e.request_id}, {"tokens", e.tokens}});
  return j;
}

namespace {

CacheStrategy parse_strategy(std::string_view name) {
  for (auto c : {CacheStrategy::Preserve, CacheStrategy::Discard, CacheStrategy::Swap})
    if (to_string(c) == name) return c;
  throw ParseError(fmt::format("unknown cache strategy '{}'", name));
}

}  // namespace

RunReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema)
      throw ParseError("unsupported report schema " + j.at("schema").dump());
    RunReport r;
    r.policy = j.at("policy").get<std::string>();
    r.cost_model = j.at("cost_model").get<std::string>();
    r.cache_mode = j.at("cache_mode").get<std::string>();
    r.workload_hash = std::stoull(j.at("workload_hash").get<std::string>(), nullptr, 16);
    for (const auto& x : j.at("per_request")) {
      RequestRecord rec;
      rec.id = x.at("id").get<std::string>();
      rec.arrival = x.at("arrival").get<double>();
      rec.finish = x.at("finish").get<double>();
      rec.jct = x.at("jct").get<double>();
      rec.segment_count = x.at("segment_count").get<int>();
      rec.total_api = x.at("total_api").get<double>();
      rec.total_ready_wait = x.at("total_ready_wait").get<double>();
      rec.total_compute = x.at("total_compute").get<double>();
      rec.total_swap = x.at("total_swap").get<double>();
      r.per_request.push_back(std::move(rec));
    }
    for (const auto& x : j.at("gantt"))
      r.gantt.push_back({x.at("request_id").get<std::string>(), x.at("segment_index").get<int>(),
                         parse_span_kind(x.at("kind").get<std::string>()),
                         x.at("start").get<double>(), x.at("end").get<double>()});
    const auto& audits = j.at("audits");
    r.memory_audits = audits.at("memory_audits").get<std::size_t>();
    r.work_conservation_violations = audits.at("work_conservation_violations").get<std::size_t>();
    for (const auto& x : audits.at("waste")) {
      WasteAudit w;
      w.time = x.at("time").get<double>();
      w.request_id = x.at("request_id").get<std::string>();
      w.segment_index = x.at("segment_index").get<int>();
      w.utilization = x.at("utilization").get<double>();
      w.t_api = x.at("t_api").get<double>();
      w.c_self = x.at("c_self").get<double>();
      w.c_batch = x.at("c_batch").get<double>();
      w.t_recompute = x.at("t_recompute").get<double>();
      w.t_swap = x.at("t_swap").get<double>();
      const auto& e = x.at("estimate");
      w.estimate.preserve = e.at("preserve").get<double>();
      w.estimate.discard = e.at("discard").get<double>();
      w.estimate.swap = e.at("swap").get<double>();
      w.estimate.chosen = parse_strategy(e.at("chosen").get<std::string>());
      r.waste_audits.push_back(std::move(w));
    }
    for (const auto& x : audits.at("aging"))
      r.aging_events.push_back({x.at("time").get<double>(), x.at("request_id").get<std::string>(),
                                x.at("response_ratio").get<double>()});
    for (const auto& x : audits.at("evictions"))
      r.evictions.push_back({x.at("time").get<double>(), x.at("request_id").get<std::string>(),
                             x.at("tokens").get<std::int64_t>()});
    r.aggregates = summarize(r.per_request);
    return r;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace agentsched
