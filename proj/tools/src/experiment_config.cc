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

#include "experiment_config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "agentsched/errors.h"

namespace agentsched::cli {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? s.npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    throw ConfigError(fmt::format("{}: '{}' is not an integer", what, text));
  return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
  const auto t = lower(trim(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", what, text));
}

ApiCategory category_named(std::string_view name) {
  const auto want = lower(trim(name));
  for (auto c : kAllApiCategories)
    if (lower(to_string(c)) == want) return c;
  throw ConfigError(fmt::format("unknown API category '{}'", name));
}

// "key=value,key=value"
template <typename K, typename F>
std::map<K, double> parse_weights(std::string_view text, std::string_view what, F&& key_of) {
  std::map<K, double> out;
  for (auto item : split(text, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(fmt::format("{}: expected key=value, got '{}'", what, item));
    out[key_of(trim(item.substr(0, eq)))] = parse_double(item.substr(eq + 1), what);
  }
  return out;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

std::string join_doubles(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(format_double(x));
  return fmt::format("{}", fmt::join(parts, ","));
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<ordered_json(const ExperimentConfig&)> get;
};

std::vector<Field> make_fields() {
  std::vector<Field> f;
  auto add = [&](std::string key, auto set, auto get) {
    f.push_back({std::move(key), std::move(set), std::move(get)});
  };
  using C = ExperimentConfig;
  using V = std::string_view;

  add("workload.seed", [](C& c, V v) { c.workload.seed = static_cast<std::uint64_t>(parse_int(v, "workload.seed")); },
      [](const C& c) { return ordered_json(c.workload.seed); });
  add("workload.qps", [](C& c, V v) { c.workload.qps = parse_double(v, "workload.qps"); },
      [](const C& c) { return ordered_json(c.workload.qps); });
  add("workload.duration",
      [](C& c, V v) { c.workload.duration = parse_double(v, "workload.duration"); },
      [](const C& c) { return ordered_json(c.workload.duration); });
  add("workload.trace",
      [](C& c, V v) {
        if (trim(v).empty()) c.trace.reset();
        else c.trace = std::filesystem::path(std::string(trim(v)));
      },
      [](const C& c) { return ordered_json(c.trace ? c.trace->string() : ""); });
  add("workload.example", [](C& c, V v) { apply_example(c, trim(v)); },
      [](const C& c) { return ordered_json(c.example); });
  add("workload.category_mix",
      [](C& c, V v) {
        c.workload.category_mix = parse_weights<ApiCategory>(v, "workload.category_mix", category_named);
      },
      [](const C& c) {
        std::vector<std::string> parts;
        for (auto [k, p] : c.workload.category_mix)
          parts.push_back(fmt::format("{}={}", lower(to_string(k)), format_double(p)));
        return ordered_json(fmt::format("{}", fmt::join(parts, ",")));
      });
  add("workload.segment_counts",
      [](C& c, V v) {
        c.workload.segment_count_distribution = parse_weights<int>(v, "workload.segment_counts", [](V k) {
          return static_cast<int>(parse_int(k, "workload.segment_counts"));
        });
      },
      [](const C& c) {
        std::vector<std::string> parts;
        for (auto [k, p] : c.workload.segment_count_distribution)
          parts.push_back(fmt::format("{}={}", k, format_double(p)));
        return ordered_json(fmt::format("{}", fmt::join(parts, ",")));
      });

  add("policy.name", [](C& c, V v) { c.policy = std::string(trim(v)); },
      [](const C& c) { return ordered_json(c.policy); });

  add("mlfq.queue_count",
      [](C& c, V v) { c.mlfq.queue_count = static_cast<int>(parse_int(v, "mlfq.queue_count")); },
      [](const C& c) { return ordered_json(c.mlfq.queue_count); });
  add("mlfq.token_thresholds",
      [](C& c, V v) { c.mlfq.token_thresholds = parse_double_list(v, "mlfq.token_thresholds"); },
      [](const C& c) { return ordered_json(join_doubles(c.mlfq.token_thresholds)); });
  add("mlfq.aging_threshold",
      [](C& c, V v) { c.mlfq.aging_threshold = parse_double(v, "mlfq.aging_threshold"); },
      [](const C& c) { return ordered_json(format_double(c.mlfq.aging_threshold)); });
  add("mlfq.promotion_step",
      [](C& c, V v) { c.mlfq.promotion_step = static_cast<int>(parse_int(v, "mlfq.promotion_step")); },
      [](const C& c) { return ordered_json(c.mlfq.promotion_step); });
  add("mlfq.spillover", [](C& c, V v) { c.mlfq.spillover = parse_bool(v, "mlfq.spillover"); },
      [](const C& c) { return ordered_json(c.mlfq.spillover); });

  add("memory.capacity_tokens",
      [](C& c, V v) { c.memory.capacity_tokens = parse_int(v, "memory.capacity_tokens"); },
      [](const C& c) { return ordered_json(c.memory.capacity_tokens); });
  add("memory.availability",
      [](C& c, V v) { c.memory.availability = parse_double(v, "memory.availability"); },
      [](const C& c) { return ordered_json(c.memory.availability); });
  add("memory.per_token_bytes",
      [](C& c, V v) { c.memory.per_token_bytes = parse_double(v, "memory.per_token_bytes"); },
      [](const C& c) { return ordered_json(c.memory.per_token_bytes); });
  add("memory.swap_bandwidth",
      [](C& c, V v) { c.memory.swap_bandwidth = parse_double(v, "memory.swap_bandwidth"); },
      [](const C& c) { return ordered_json(c.memory.swap_bandwidth); });
  add("memory.watermark",
      [](C& c, V v) { c.memory.watermark = parse_double(v, "memory.watermark"); },
      [](const C& c) { return ordered_json(c.memory.watermark); });
  add("memory.mode", [](C& c, V v) { c.memory.mode = parse_cache_mode(trim(v)); },
      [](const C& c) { return ordered_json(to_string(c.memory.mode)); });
  add("memory.serialize_swaps",
      [](C& c, V v) { c.memory.serialize_swaps = parse_bool(v, "memory.serialize_swaps"); },
      [](const C& c) { return ordered_json(c.memory.serialize_swaps); });

  add("sim.cost_model", [](C& c, V v) { c.sim.cost_model = parse_cost_model(trim(v)); },
      [](const C& c) { return ordered_json(to_string(c.sim.cost_model)); });
  add("sim.max_batch_size",
      [](C& c, V v) {
        const auto n = parse_int(v, "sim.max_batch_size");
        if (n < 0) throw ConfigError("sim.max_batch_size must be >= 0");
        c.sim.max_batch_size = static_cast<std::size_t>(n);
      },
      [](const C& c) { return ordered_json(c.sim.max_batch_size); });
  add("sim.audit_memory", [](C& c, V v) { c.sim.audit_memory = parse_bool(v, "sim.audit_memory"); },
      [](const C& c) { return ordered_json(c.sim.audit_memory); });
  add("sim.record_gantt", [](C& c, V v) { c.sim.record_gantt = parse_bool(v, "sim.record_gantt"); },
      [](const C& c) { return ordered_json(c.sim.record_gantt); });

  add("predictor.prefill_profile",
      [](C& c, V v) {
        std::vector<ProfilePoint> pts;
        for (auto item : split(v, ',')) {
          const auto colon = item.find(':');
          if (colon == std::string_view::npos)
            throw ConfigError(fmt::format("predictor.prefill_profile: expected tokens:seconds, got '{}'", item));
          pts.push_back({parse_int(item.substr(0, colon), "predictor.prefill_profile"),
                         parse_double(item.substr(colon + 1), "predictor.prefill_profile")});
        }
        PrefillProfile check(pts);  // validates
        c.prefill_profile = std::move(pts);
      },
      [](const C& c) {
        std::vector<std::string> parts;
        for (const auto& p : c.prefill_profile)
          parts.push_back(fmt::format("{}:{}", p.input_length, format_double(p.latency)));
        return ordered_json(fmt::format("{}", fmt::join(parts, ",")));
      });
  add("predictor.decode_latency",
      [](C& c, V v) { c.decode_latency = parse_double(v, "predictor.decode_latency"); },
      [](const C& c) { return ordered_json(c.decode_latency); });
  add("predictor.noise_sigma",
      [](C& c, V v) { c.predictor.noise_sigma = parse_double(v, "predictor.noise_sigma"); },
      [](const C& c) { return ordered_json(c.predictor.noise_sigma); });
  add("predictor.noise_seed",
      [](C& c, V v) { c.predictor.noise_seed = static_cast<std::uint64_t>(parse_int(v, "predictor.noise_seed")); },
      [](const C& c) { return ordered_json(c.predictor.noise_seed); });
  for (auto cat : kAllApiCategories) {
    if (cat == ApiCategory::None) continue;
    add("predictor.api_" + lower(to_string(cat)),
        [cat](C& c, V v) { c.api_means[cat] = parse_double(v, "predictor.api_" + lower(to_string(cat))); },
        [cat](const C& c) { return ordered_json(c.api_means.at(cat)); });
  }

  add("sweep.policies",
      [](C& c, V v) {
        c.sweep.policies.clear();
        for (auto p : split(v, ','))
          if (!p.empty()) c.sweep.policies.emplace_back(p);
      },
      [](const C& c) { return ordered_json(fmt::format("{}", fmt::join(c.sweep.policies, ","))); });
  add("sweep.qps", [](C& c, V v) { c.sweep.qps = parse_double_list(v, "sweep.qps"); },
      [](const C& c) { return ordered_json(join_doubles(c.sweep.qps)); });
  add("sweep.availability",
      [](C& c, V v) { c.sweep.availability = parse_double_list(v, "sweep.availability"); },
      [](const C& c) { return ordered_json(join_doubles(c.sweep.availability)); });
  add("sweep.aging", [](C& c, V v) { c.sweep.aging = parse_double_list(v, "sweep.aging"); },
      [](const C& c) { return ordered_json(join_doubles(c.sweep.aging)); });
  add("sweep.thresholds",
      [](C& c, V v) {
        c.sweep.thresholds.clear();
        for (auto vec : split(v, ';'))
          if (!vec.empty()) c.sweep.thresholds.push_back(parse_double_list(vec, "sweep.thresholds"));
      },
      [](const C& c) {
        std::vector<std::string> parts;
        for (const auto& t : c.sweep.thresholds) parts.push_back(join_doubles(t));
        return ordered_json(fmt::format("{}", fmt::join(parts, ";")));
      });
  add("sweep.seeds",
      [](C& c, V v) {
        c.sweep.seeds.clear();
        for (auto s : split(v, ','))
          if (!s.empty()) c.sweep.seeds.push_back(static_cast<std::uint64_t>(parse_int(s, "sweep.seeds")));
      },
      [](const C& c) { return ordered_json(fmt::format("{}", fmt::join(c.sweep.seeds, ","))); });
  add("sweep.baseline_cache_mode",
      [](C& c, V v) {
        const auto t = std::string(trim(v));
        if (!t.empty()) parse_cache_mode(t);
        c.sweep.baseline_cache_mode = t;
      },
      [](const C& c) { return ordered_json(c.sweep.baseline_cache_mode); });
  add("sweep.jobs",
      [](C& c, V v) {
        const auto n = parse_int(v, "sweep.jobs");
        if (n < 1) throw ConfigError("sweep.jobs must be >= 1");
        c.jobs = static_cast<int>(n);
      },
      [](const C& c) { return ordered_json(c.jobs); });

  add("output.dir", [](C& c, V v) { c.output_dir = std::string(trim(v)); },
      [](const C& c) { return ordered_json(c.output_dir.string()); });
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = make_fields();
  return f;
}

}  // namespace

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  const auto t = lower(text);
  if (t == "inf" || t == "infinity" || t == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || std::isnan(v))
    throw ConfigError(fmt::format("{}: '{}' is not a number", what, text));
  return v;
}

std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  for (auto item : split(text, ','))
    if (!item.empty()) out.push_back(parse_double(item, what));
  return out;
}

Predictor ExperimentConfig::make_predictor() const {
  HardwareModel hw(PrefillProfile(prefill_profile), DecodeModel{decode_latency});
  return Predictor(std::move(hw), ApiLatencyTable(api_means), predictor);
}

void ExperimentConfig::validate() const {
  if (trace && !example.empty())
    throw ConfigError("workload.trace and workload.example are mutually exclusive");
  if (!example.empty() && example != "figure2")
    throw ConfigError(fmt::format("unknown example '{}'", example));
  if (!trace && example.empty()) agentsched::validate(workload);
  if (!(decode_latency > 0.0)) throw ConfigError("predictor.decode_latency must be positive");
  if (!(predictor.noise_sigma >= 0.0)) throw ConfigError("predictor.noise_sigma must be >= 0");
  mlfq.validate();
  memory.validate();
  make_predictor();
  if (sweep.policies.empty() || sweep.qps.empty() || sweep.availability.empty() ||
      sweep.aging.empty() || sweep.thresholds.empty() || sweep.seeds.empty())
    throw ValidationError("sweep axes must be non-empty");
}

void apply_example(ExperimentConfig& config, std::string_view name) {
  if (name.empty()) {
    config.example.clear();
    return;
  }
  if (name != "figure2") throw ConfigError(fmt::format("unknown example '{}'", name));
  config.example = "figure2";
  config.sim.cost_model = CostModel::Serial;
  config.sim.max_batch_size = 1;
  config.memory.mode = CacheMode::Preserve;
}

void set_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  for (const auto& f : fields())
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  throw ConfigError(fmt::format("unknown configuration key '{}'", key));
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError(fmt::format("override '{}' is not section.key=value", assignment));
  set_value(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void load_ini(ExperimentConfig& config, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw std::filesystem::filesystem_error(
        "config file not found", path, std::make_error_code(std::errc::no_such_file_or_directory));
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", path.string(), e.line(), e.message()));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw ConfigError(fmt::format("{}: key '{}' outside a section", path.string(), section));
    for (const auto& [key, value] : body)
      set_value(config, section + "." + key, value.get_value<std::string>());
  }
}

nlohmann::ordered_json resolved(const ExperimentConfig& config) {
  ordered_json j = ordered_json::object();
  for (const auto& f : fields()) j[f.key] = f.get(config);
  return j;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

Workload load_workload(const ExperimentConfig& config) {
  if (config.example == "figure2") return figure2_workload();
  if (config.trace) return load_trace(*config.trace);
  return generate(config.workload);
}

}  // namespace agentsched::cli
