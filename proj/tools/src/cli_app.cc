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

#include "cli_app.h"

#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "agentsched/errors.h"
#include "commands.h"
#include "experiment_config.h"

namespace agentsched::cli {

namespace {

// Flags shared by generate, run and sweep. Each maps onto a config key and
// is applied after the config file and --set overrides.
struct CommonFlags {
  std::string config_file;
  std::vector<std::string> overrides;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("-c,--config", f.config_file, "INI experiment config")->check(CLI::ExistingFile);
  app->add_option("--set", f.overrides, "Override a config key: section.key=value")
      ->type_name("KEY=VALUE");
  auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
    f.options[key] = app->add_option(name, f.values[key], help + " (" + key + ")");
  };
  flag("--example", "workload.example", "Built-in workload preset: figure2");
  flag("--trace", "workload.trace", "Replay a line-delimited trace");
  flag("--seed", "workload.seed", "Workload seed");
  flag("--qps", "workload.qps", "Arrival rate, requests/second");
  flag("--duration", "workload.duration", "Arrival window, seconds");
  flag("-p,--policy", "policy.name", "fcfs | sjf-segment | sjf-request | las | stateful-mlfq");
  flag("--aging", "mlfq.aging_threshold", "Aging response-ratio threshold, or inf");
  flag("--thresholds", "mlfq.token_thresholds", "Comma-separated token thresholds");
  flag("--memory", "memory.availability", "Usable fraction of KV capacity");
  flag("--capacity", "memory.capacity_tokens", "KV capacity in tokens");
  flag("--cache-mode", "memory.mode", "adaptive | preserve | discard | swap");
  flag("--cost-model", "sim.cost_model", "serial | parallel-max");
  flag("--max-batch", "sim.max_batch_size", "Segments per batch, 0 = memory-bound");
  flag("-o,--out", "output.dir", "Output directory");
  flag("-j,--jobs", "sweep.jobs", "Concurrent sweep runs");
  flag("--policies", "sweep.policies", "Sweep: comma-separated policies");
  flag("--qps-levels", "sweep.qps", "Sweep: comma-separated qps values");
  flag("--memory-levels", "sweep.availability", "Sweep: comma-separated availabilities");
  flag("--aging-levels", "sweep.aging", "Sweep: comma-separated aging thresholds");
  flag("--threshold-sets", "sweep.thresholds", "Sweep: threshold vectors separated by ';'");
  flag("--seeds", "sweep.seeds", "Sweep: comma-separated seeds");
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig c;
  if (!f.config_file.empty()) load_ini(c, f.config_file);
  for (const auto& o : f.overrides) apply_override(c, o);
  // The example preset goes first so explicit flags can adjust it.
  if (f.options.at("workload.example")->count() > 0)
    set_value(c, "workload.example", f.values.at("workload.example"));
  for (const auto& [key, opt] : f.options)
    if (key != "workload.example" && opt->count() > 0) set_value(c, key, f.values.at(key));
  return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-event simulator for scheduling multi-segment agent requests"};
  app.name("agentsched");
  app.require_subcommand(1);
  app.set_version_flag("--version", "agentsched 0.1.0");

  CommonFlags gen_flags, run_flags, sweep_flags;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic workload trace");
  add_common(gen, gen_flags);
  std::string gen_out;
  gen->add_option("--trace-out", gen_out, "Trace file to write (default: stdout)");

  auto* run = app.add_subcommand("run", "Run one simulation and write report and traces");
  add_common(run, run_flags);
  bool print_config = false;
  run->add_flag("--print-config", print_config, "Print the resolved config and exit");

  auto* sweep = app.add_subcommand("sweep", "Run the cross product of the sweep axes");
  add_common(sweep, sweep_flags);

  auto* gantt = app.add_subcommand("gantt", "Render a Gantt trace as text");
  std::string gantt_path;
  GanttOptions gantt_opts;
  std::string gantt_csv_path, gantt_lanes;
  gantt->add_option("trace", gantt_path, "gantt.jsonl written by run")->required();
  gantt->add_option("--width", gantt_opts.width, "Chart width in columns")
      ->check(CLI::Range(8, 1000));
  gantt->add_option("--csv", gantt_csv_path, "Also write spans as CSV");
  gantt->add_option("--lanes", gantt_lanes, "Directory for one CSV per request lane");

  auto* cmp = app.add_subcommand("compare", "Compare reports from the same workload");
  std::vector<std::string> cmp_paths;
  std::string cmp_baseline = "fcfs", cmp_json;
  cmp->add_option("reports", cmp_paths, "report.json files")->required();
  cmp->add_option("--baseline", cmp_baseline, "Baseline policy for the delta column");
  cmp->add_option("--json", cmp_json, "Also write the table as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const auto c = build_config(gen_flags);
      std::optional<std::filesystem::path> path;
      if (!gen_out.empty()) path = gen_out;
      cmd_generate(c, path, out);
    } else if (run->parsed()) {
      const auto c = build_config(run_flags);
      if (print_config) {
        out << resolved(c).dump(2) << "\n";
        return kExitOk;
      }
      cmd_run(c, out);
    } else if (sweep->parsed()) {
      const auto c = build_config(sweep_flags);
      const auto result = cmd_sweep(c, out);
      for (const auto& cell : result.cells)
        if (!cell.ok) return kExitRuntime;
    } else if (gantt->parsed()) {
      if (!gantt_csv_path.empty()) gantt_opts.csv = gantt_csv_path;
      if (!gantt_lanes.empty()) gantt_opts.lanes_dir = gantt_lanes;
      cmd_gantt(gantt_path, gantt_opts, out, err);
    } else if (cmp->parsed()) {
      std::vector<std::filesystem::path> paths(cmp_paths.begin(), cmp_paths.end());
      std::optional<std::filesystem::path> json;
      if (!cmp_json.empty()) json = cmp_json;
      cmd_compare(paths, cmp_baseline, json, out);
    }
  } catch (const std::exception& e) {
    err << "agentsched: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace agentsched::cli
