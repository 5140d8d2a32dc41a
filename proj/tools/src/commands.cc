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

#include "commands.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "agentsched/errors.h"
#include "agentsched/gantt.h"
#include "agentsched/simulator.h"

namespace agentsched::cli {

using ordered_json = nlohmann::ordered_json;

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  f << content;
  if (!f) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw std::filesystem::filesystem_error(
        "cannot open file", path, std::make_error_code(std::errc::no_such_file_or_directory));
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string aging_text(const std::optional<double>& a) {
  if (!a) return "";
  return std::isinf(*a) ? "inf" : fmt::format("{}", *a);
}

std::string thresholds_text(const std::optional<std::vector<double>>& t) {
  return t ? fmt::format("{}", fmt::join(*t, " ")) : "";
}

RunReport simulate(const ExperimentConfig& config, const Workload& workload) {
  const Predictor predictor = config.make_predictor();
  auto policy = make_policy(config.policy, predictor, config.mlfq);
  return run(workload, *policy, predictor, predictor.hardware(), config.memory, config.sim);
}

}  // namespace

std::string format_seconds(double value) {
  std::string s = fmt::format("{:.6g}", value);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void cmd_generate(const ExperimentConfig& config,
                  const std::optional<std::filesystem::path>& out_path, std::ostream& out) {
  config.validate();
  const Workload w = load_workload(config);
  if (!out_path) {
    out << serialize_trace(w);
    return;
  }
  save_trace(w, *out_path);
  out << fmt::format("wrote {} requests to {}\n", w.size(), out_path->string());
}

RunReport cmd_run(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  const Workload workload = load_workload(config);
  RunReport report = simulate(config, workload);

  ordered_json j = to_json(report);
  j["config"] = resolved(config);
  const auto dir = config.output_dir;
  write_file(dir / "report.json", j.dump(2) + "\n");
  const std::string gantt = serialize_gantt(report);
  write_file(dir / "gantt.jsonl", gantt);
  write_file(dir / "gantt.csv", gantt_csv(parse_gantt(gantt)));

  const auto& a = report.aggregates;
  out << fmt::format("policy {}: {} requests, cost model {}, cache mode {}\n", report.policy,
                     report.per_request.size(), report.cost_model, report.cache_mode);
  out << fmt::format("avg JCT {}  p50 {}  p95 {}  p99 {}\n", format_seconds(a.avg_jct),
                     format_seconds(a.p50), format_seconds(a.p95), format_seconds(a.p99));
  if (!report.evictions.empty() || !report.waste_audits.empty() || !report.aging_events.empty())
    out << fmt::format("cache decisions {}, evictions {}, aging promotions {}\n",
                       report.waste_audits.size(), report.evictions.size(),
                       report.aging_events.size());
  out << fmt::format("wrote {}\n", (dir / "report.json").string());
  return report;
}

std::vector<SweepCell> expand_sweep(const ExperimentConfig& config) {
  const auto& ax = config.sweep;
  if (ax.policies.empty() || ax.qps.empty() || ax.availability.empty() || ax.aging.empty() ||
      ax.thresholds.empty() || ax.seeds.empty())
    throw ValidationError("sweep axes must be non-empty");
  if (config.trace || !config.example.empty())
    throw ConfigError("sweep generates its workloads; unset workload.trace and workload.example");

  std::vector<SweepCell> cells;
  for (const auto& policy : ax.policies) {
    make_policy(policy, Predictor::defaults());  // rejects unknown names up front
    const bool mlfq = policy == "stateful-mlfq";
    const std::size_t n_aging = mlfq ? ax.aging.size() : 1;
    const std::size_t n_thr = mlfq ? ax.thresholds.size() : 1;
    for (double avail : ax.availability)
      for (std::size_t ai = 0; ai < n_aging; ++ai)
        for (std::size_t ti = 0; ti < n_thr; ++ti)
          for (double qps : ax.qps)
            for (auto seed : ax.seeds) {
              SweepCell c;
              c.policy = policy;
              c.qps = qps;
              c.availability = avail;
              c.seed = seed;
              c.config = config;
              c.config.policy = policy;
              c.config.workload.qps = qps;
              c.config.workload.seed = seed;
              c.config.memory.availability = avail;
              c.config.sim.record_gantt = false;
              if (mlfq) {
                c.aging = ax.aging[ai];
                c.thresholds = ax.thresholds[ti];
                c.config.mlfq.aging_threshold = ax.aging[ai];
                c.config.mlfq.token_thresholds = ax.thresholds[ti];
                c.config.mlfq.queue_count = static_cast<int>(ax.thresholds[ti].size()) + 1;
              } else if (!ax.baseline_cache_mode.empty()) {
                c.config.memory.mode = parse_cache_mode(ax.baseline_cache_mode);
              }
              cells.push_back(std::move(c));
            }
  }
  return cells;
}

SweepResult cmd_sweep(const ExperimentConfig& config, std::ostream& out) {
  SweepResult result;
  result.cells = expand_sweep(config);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      SweepCell& c = result.cells[i];
      try {
        c.config.validate();
        const RunReport r = simulate(c.config, generate(c.config.workload));
        c.aggregates = r.aggregates;
        c.requests = r.per_request.size();
        c.ok = c.requests > 0;
        if (!c.ok) c.error = "workload is empty";
      } catch (const std::exception& e) {
        c.ok = false;
        c.error = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(result.cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Degradation from the lowest to the highest qps, per remaining axis point.
  const double q_lo = *std::min_element(config.sweep.qps.begin(), config.sweep.qps.end());
  const double q_hi = *std::max_element(config.sweep.qps.begin(), config.sweep.qps.end());
  if (q_hi > q_lo) {
    using Key = std::tuple<std::string, double, std::string, std::string, std::uint64_t>;
    std::map<Key, std::pair<const SweepCell*, const SweepCell*>> groups;
    std::vector<Key> order;
    for (const auto& c : result.cells) {
      const Key k{c.policy, c.availability, aging_text(c.aging), thresholds_text(c.thresholds),
                  c.seed};
      if (!groups.contains(k)) order.push_back(k);
      auto& g = groups[k];
      if (c.qps == q_lo) g.first = &c;
      if (c.qps == q_hi) g.second = &c;
    }
    for (const auto& k : order) {
      const auto [lo, hi] = groups[k];
      if (!lo || !hi || !lo->ok || !hi->ok) continue;
      DegradationRow row{lo->policy, lo->availability, lo->aging, lo->thresholds, lo->seed,
                         q_lo, q_hi, lo->aggregates.avg_jct, hi->aggregates.avg_jct, 0.0};
      row.degradation_pct = degradation_ratio(row.avg_low, row.avg_high);
      result.degradation.push_back(std::move(row));
    }
  }

  const auto dir = config.output_dir;
  write_file(dir / "sweep.csv", sweep_csv(result));
  write_file(dir / "sweep.json", sweep_json(result).dump(2) + "\n");
  write_file(dir / "degradation.csv", degradation_csv(result));

  std::size_t failed = 0;
  for (const auto& c : result.cells) {
    if (!c.ok) ++failed;
    out << fmt::format("{:<14} qps={:<6g} mem={:<5g} aging={:<5} seed={:<4} {}\n", c.policy, c.qps,
                       c.availability, c.aging ? aging_text(c.aging) : "-", c.seed,
                       c.ok ? "avg JCT " + format_seconds(c.aggregates.avg_jct)
                            : "FAILED: " + c.error);
  }
  for (const auto& d : result.degradation)
    out << fmt::format("degradation {:<14} mem={:<5g} aging={:<5} seed={:<4} {:.2f}%\n", d.policy,
                       d.availability, d.aging ? aging_text(d.aging) : "-", d.seed,
                       d.degradation_pct);
  out << fmt::format("{} cells, {} failed; wrote {}\n", result.cells.size(), failed,
                     (dir / "sweep.csv").string());
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string s =
      "policy,qps,memory_availability,aging_threshold,token_thresholds,seed,status,requests,"
      "avg_jct,p50,p95,p99,error\n";
  for (const auto& c : result.cells) {
    const auto& a = c.aggregates;
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", c.policy, c.qps, c.availability,
                     aging_text(c.aging), thresholds_text(c.thresholds), c.seed,
                     c.ok ? "ok" : "error", c.requests, c.ok ? fmt::format("{}", a.avg_jct) : "",
                     c.ok ? fmt::format("{}", a.p50) : "", c.ok ? fmt::format("{}", a.p95) : "",
                     c.ok ? fmt::format("{}", a.p99) : "", csv_field(c.error));
  }
  return s;
}

std::string degradation_csv(const SweepResult& result) {
  std::string s =
      "policy,memory_availability,aging_threshold,token_thresholds,seed,qps_low,qps_high,"
      "avg_jct_low,avg_jct_high,degradation_pct\n";
  for (const auto& d : result.degradation)
    s += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", d.policy, d.availability,
                     aging_text(d.aging), thresholds_text(d.thresholds), d.seed, d.qps_low,
                     d.qps_high, d.avg_low, d.avg_high, d.degradation_pct);
  return s;
}

ordered_json sweep_json(const SweepResult& result) {
  ordered_json j;
  j["schema"] = "agentsched.sweep/1";
  j["cells"] = ordered_json::array();
  for (const auto& c : result.cells) {
    ordered_json cell;
    cell["policy"] = c.policy;
    cell["qps"] = c.qps;
    cell["memory_availability"] = c.availability;
    cell["aging_threshold"] = c.aging ? ordered_json(aging_text(c.aging)) : ordered_json();
    cell["token_thresholds"] = c.thresholds ? ordered_json(*c.thresholds) : ordered_json();
    cell["seed"] = c.seed;
    cell["status"] = c.ok ? "ok" : "error";
    if (c.ok) {
      cell["requests"] = c.requests;
      cell["avg_jct"] = c.aggregates.avg_jct;
      cell["p50"] = c.aggregates.p50;
      cell["p95"] = c.aggregates.p95;
      cell["p99"] = c.aggregates.p99;
    } else {
      cell["error"] = c.error;
    }
    cell["config"] = resolved(c.config);
    j["cells"].push_back(std::move(cell));
  }
  j["degradation"] = ordered_json::array();
  for (const auto& d : result.degradation)
    j["degradation"].push_back({{"policy", d.policy},
                                {"memory_availability", d.availability},
                                {"aging_threshold", d.aging ? ordered_json(aging_text(d.aging))
                                                            : ordered_json()},
                                {"seed", d.seed},
                                {"qps_low", d.qps_low},
                                {"qps_high", d.qps_high},
                                {"avg_jct_low", d.avg_low},
                                {"avg_jct_high", d.avg_high},
                                {"degradation_pct", d.degradation_pct}});
  return j;
}

void cmd_gantt(const std::filesystem::path& trace_path, const GanttOptions& options,
               std::ostream& out, std::ostream& err) {
  if (!std::filesystem::exists(trace_path))
    throw std::filesystem::filesystem_error(
        "gantt trace not found", trace_path,
        std::make_error_code(std::errc::no_such_file_or_directory));
  const GanttTrace trace = load_gantt(trace_path);
  check_integrity(trace);
  if (trace.entries.empty()) err << "warning: trace has no spans\n";
  out << render_gantt(trace, options.width);
  if (options.csv) write_file(*options.csv, gantt_csv(trace));
  if (options.lanes_dir) {
    std::filesystem::create_directories(*options.lanes_dir);
    for (const auto& lane : compute_lanes(trace)) {
      std::string s = "start,end\n";
      for (const auto& [b, e] : lane.compute) s += fmt::format("{},{}\n", b, e);
      write_file(*options.lanes_dir / fmt::format("lane_{}.csv", lane.request_id), s);
    }
  }
}

ComparisonTable cmd_compare(const std::vector<std::filesystem::path>& reports,
                            const std::string& baseline,
                            const std::optional<std::filesystem::path>& json_out,
                            std::ostream& out) {
  if (reports.empty()) throw ValidationError("compare needs at least one report");
  std::map<std::string, RunReport> by_policy;
  for (const auto& path : reports) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
    RunReport r = report_from_json(j);
    const std::string name = r.policy;
    if (!by_policy.emplace(name, std::move(r)).second)
      throw ValidationError(fmt::format("two reports for policy '{}'", name));
  }
  const ComparisonTable table = compare(by_policy, baseline);
  out << render_text(table);
  if (json_out) write_file(*json_out, to_json(table).dump(2) + "\n");
  return table;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const std::filesystem::filesystem_error*>(&e))
    return kExitUsage;
  return kExitRuntime;
}

}  // namespace agentsched::cli
