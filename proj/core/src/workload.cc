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

#include "agentsched/workload.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "agentsched/errors.h"

namespace agentsched {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kMixTolerance = 1e-9;

double sample(const LogNormalSpec& spec, std::mt19937_64& rng) {
  if (spec.cv <= 0.0) return spec.mean;
  const double sigma2 = std::log1p(spec.cv * spec.cv);
  const double mu = std::log(spec.mean) - 0.5 * sigma2;
  return std::lognormal_distribution<double>(mu, std::sqrt(sigma2))(rng);
}

std::int64_t sample_tokens(const LogNormalSpec& spec, std::int64_t floor_value,
                           std::mt19937_64& rng) {
  const auto v = static_cast<std::int64_t>(std::llround(sample(spec, rng)));
  return std::max(v, floor_value);
}

void check_probability_map(const auto& mix, const char* what) {
  if (mix.empty()) throw ConfigError(fmt::format("{} is empty", what));
  double sum = 0.0;
  for (const auto& [key, p] : mix) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError(fmt::format("{}: probability {} outside [0,1]", what, p));
    sum += p;
  }
  if (std::abs(sum - 1.0) > kMixTolerance)
    throw ConfigError(fmt::format("{} sums to {}, expected 1", what, sum));
}

void check_lognormal(const LogNormalSpec& s, const std::string& what) {
  if (!(s.mean >= 0.0) || !(s.cv >= 0.0) || !std::isfinite(s.mean) || !std::isfinite(s.cv))
    throw ConfigError(what + ": mean and cv must be finite and non-negative");
  if (s.cv > 0.0 && s.mean <= 0.0) throw ConfigError(what + ": dispersion needs mean > 0");
}

ordered_json to_json(const RequestSpec& r) {
  ordered_json segs = ordered_json::array();
  for (const auto& s : r.segments) {
    ordered_json j;
    j["index"] = s.index;
    j["n_in"] = s.n_in;
    j["n_gen"] = s.n_gen;
    j["api_category"] = to_string(s.api_category);
    j["api_duration"] = s.api_duration;
    if (s.direct_compute_time) j["direct_compute_time"] = *s.direct_compute_time;
    segs.push_back(std::move(j));
  }
  ordered_json j;
  j["schema"] = kTraceSchemaVersion;
  j["id"] = r.id;
  j["arrival_time"] = r.arrival_time;
  j["segments"] = std::move(segs);
  return j;
}

RequestSpec from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not an object");
  if (j.at("schema").get<int>() != kTraceSchemaVersion)
    throw std::invalid_argument(
        fmt::format("unsupported schema version {}", j.at("schema").dump()));
  RequestSpec r;
  r.id = j.at("id").get<std::string>();
  r.arrival_time = j.at("arrival_time").get<double>();
  for (const auto& js : j.at("segments")) {
    SegmentSpec s;
    s.index = js.at("index").get<int>();
    s.n_in = js.at("n_in").get<std::int64_t>();
    s.n_gen = js.at("n_gen").get<std::int64_t>();
    s.api_category = parse_api_category(js.at("api_category").get<std::string>());
    s.api_duration = js.at("api_duration").get<double>();
    if (auto it = js.find("direct_compute_time"); it != js.end())
      s.direct_compute_time = it->get<double>();
    r.segments.push_back(s);
  }
  return r;
}

}  // namespace

std::string_view to_string(ApiCategory c) {
  switch (c) {
    case ApiCategory::Math: return "Math";
    case ApiCategory::Search: return "Search";
    case ApiCategory::VirtualEnv: return "VirtualEnv";
    case ApiCategory::Chat: return "Chat";
    case ApiCategory::ImageGen: return "ImageGen";
    case ApiCategory::TTS: return "TTS";
    case ApiCategory::None: return "None";
  }
  return "None";
}

ApiCategory parse_api_category(std::string_view name) {
  for (auto c : kAllApiCategories)
    if (to_string(c) == name) return c;
  throw ConfigError(fmt::format("unknown API category '{}'", name));
}

void validate(const RequestSpec& r) {
  if (r.id.empty()) throw ValidationError("request with empty id");
  if (!(r.arrival_time >= 0.0) || !std::isfinite(r.arrival_time))
    throw ValidationError(fmt::format("request {}: arrival_time must be >= 0", r.id));
  if (r.segments.empty()) throw ValidationError(fmt::format("request {}: no segments", r.id));
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    const auto& s = r.segments[i];
    const bool last = i + 1 == r.segments.size();
    if (s.index != static_cast<int>(i) + 1)
      throw ValidationError(fmt::format("request {}: segment index {} where {} expected",
                                        r.id, s.index, i + 1));
    if (s.n_in < 0) throw ValidationError(fmt::format("request {}: negative n_in", r.id));
    if (s.n_gen < 1) throw ValidationError(fmt::format("request {}: n_gen must be >= 1", r.id));
    if (i == 0 && s.n_in < 1)
      throw ValidationError(fmt::format("request {}: first segment needs n_in >= 1", r.id));
    if (!(s.api_duration >= 0.0) || !std::isfinite(s.api_duration))
      throw ValidationError(fmt::format("request {}: api_duration must be >= 0", r.id));
    if (s.api_category == ApiCategory::None && s.api_duration != 0.0)
      throw ValidationError(
          fmt::format("request {}: segment {} has no API but nonzero duration", r.id, s.index));
    if (last && s.api_category != ApiCategory::None)
      throw ValidationError(fmt::format("request {}: last segment must not call an API", r.id));
    if (s.direct_compute_time && !(*s.direct_compute_time >= 0.0))
      throw ValidationError(fmt::format("request {}: negative direct_compute_time", r.id));
  }
}

void validate(const Workload& workload) {
  std::set<std::string_view> ids;
  for (const auto& r : workload) {
    validate(r);
    if (!ids.insert(r.id).second)
      throw ValidationError(fmt::format("duplicate request id '{}'", r.id));
  }
}

void sort_for_replay(Workload& workload) {
  std::stable_sort(workload.begin(), workload.end(), [](const auto& a, const auto& b) {
    if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
    return a.id < b.id;
  });
}

WorkloadConfig WorkloadConfig::defaults() {
  WorkloadConfig c;
  c.category_mix = {{ApiCategory::Math, 0.10},     {ApiCategory::Search, 0.10},
                    {ApiCategory::VirtualEnv, 0.10}, {ApiCategory::Chat, 0.25},
                    {ApiCategory::ImageGen, 0.25},   {ApiCategory::TTS, 0.20}};
  c.segment_count_distribution = {{2, 0.10}, {3, 0.15}, {4, 0.20}, {5, 0.20},
                                  {6, 0.15}, {7, 0.10}, {8, 0.10}};
  auto profile = [](double first_in, double next_in, double gen, double api_mean,
                    double api_cv) {
    return CategoryProfile{{first_in, 0.5}, {next_in, 0.6}, {gen, 0.6}, {api_mean, api_cv}};
  };
  c.categories = {
      {ApiCategory::Math, profile(320, 24, 40, 9e-5, 0.3)},
      {ApiCategory::Search, profile(384, 160, 48, 3.0, 0.5)},
      {ApiCategory::VirtualEnv, profile(640, 48, 24, 0.5, 0.5)},
      {ApiCategory::Chat, profile(256, 96, 96, 28.6, 0.4)},
      {ApiCategory::ImageGen, profile(192, 16, 40, 20.03, 0.3)},
      {ApiCategory::TTS, profile(192, 16, 64, 10.0, 0.3)},
      {ApiCategory::None, profile(256, 32, 64, 0.0, 0.0)},
  };
  return c;
}

void validate(const WorkloadConfig& c) {
  if (!(c.qps >= 0.0) || !std::isfinite(c.qps))
    throw ConfigError(fmt::format("qps must be >= 0, got {}", c.qps));
  if (!(c.duration >= 0.0) || !std::isfinite(c.duration))
    throw ConfigError("duration must be finite and >= 0");
  check_probability_map(c.category_mix, "category_mix");
  check_probability_map(c.segment_count_distribution, "segment_count_distribution");
  for (const auto& [k, p] : c.segment_count_distribution)
    if (k < 1) throw ConfigError("segment counts must be >= 1");
  for (const auto& [cat, p] : c.category_mix) {
    if (p == 0.0) continue;
    auto it = c.categories.find(cat);
    if (it == c.categories.end())
      throw ConfigError(fmt::format("no token/latency profile for category {}", to_string(cat)));
    const auto name = std::string(to_string(cat));
    check_lognormal(it->second.first_input_tokens, name + ".first_input_tokens");
    check_lognormal(it->second.next_input_tokens, name + ".next_input_tokens");
    check_lognormal(it->second.gen_tokens, name + ".gen_tokens");
    check_lognormal(it->second.api_latency, name + ".api_latency");
  }
}

Workload generate(const WorkloadConfig& config) {
  validate(config);
  Workload out;
  if (config.qps == 0.0) return out;

  std::mt19937_64 rng(config.seed);
  std::exponential_distribution<double> gap(config.qps);

  std::vector<ApiCategory> cats;
  std::vector<double> cat_weights;
  for (const auto& [c, p] : config.category_mix) {
    cats.push_back(c);
    cat_weights.push_back(p);
  }
  std::vector<int> counts;
  std::vector<double> count_weights;
  for (const auto& [k, p] : config.segment_count_distribution) {
    counts.push_back(k);
    count_weights.push_back(p);
  }
  std::discrete_distribution<std::size_t> pick_cat(cat_weights.begin(), cat_weights.end());
  std::discrete_distribution<std::size_t> pick_count(count_weights.begin(),
                                                     count_weights.end());

  double t = 0.0;
  for (std::size_t n = 0;; ++n) {
    t += gap(rng);
    if (t > config.duration) break;
    RequestSpec r;
    r.id = fmt::format("r{:06d}", n);
    r.arrival_time = t;
    const ApiCategory cat = cats[pick_cat(rng)];
    const CategoryProfile& prof = config.categories.at(cat);
    const int k = counts[pick_count(rng)];
    for (int j = 1; j <= k; ++j) {
      SegmentSpec s;
      s.index = j;
      s.n_in = j == 1 ? sample_tokens(prof.first_input_tokens, 1, rng)
                      : sample_tokens(prof.next_input_tokens, 0, rng);
      s.n_gen = sample_tokens(prof.gen_tokens, 1, rng);
      if (j < k) {
        s.api_category = cat;
        s.api_duration = cat == ApiCategory::None ? 0.0 : sample(prof.api_latency, rng);
      }
      r.segments.push_back(s);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string serialize_trace(const Workload& workload) {
  std::string out;
  for (const auto& r : workload) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

Workload parse_trace(std::string_view text) {
  Workload out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    const auto line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    RequestSpec r;
    try {
      r = from_json(nlohmann::json::parse(line));
      validate(r);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const std::exception& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
    if (!ids.insert(r.id).second)
      throw ValidationError(fmt::format("line {}: duplicate request id '{}'", line_no, r.id));
    out.push_back(std::move(r));
  }
  return out;
}

Workload load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::filesystem::filesystem_error(
      "cannot open trace", path, std::make_error_code(std::errc::no_such_file_or_directory));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

void save_trace(const Workload& workload, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::filesystem::filesystem_error(
      "cannot write trace", path, std::make_error_code(std::errc::permission_denied));
  out << serialize_trace(workload);
}

std::uint64_t workload_hash(const Workload& workload) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : serialize_trace(workload)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Workload figure2_workload() {
  auto chain = [](std::string id, std::initializer_list<double> times) {
    RequestSpec r;
    r.id = std::move(id);
    int index = 1;
    for (double t : times) {
      SegmentSpec s;
      s.index = index++;
      s.n_in = 1;
      s.n_gen = 1;
      s.direct_compute_time = t;
      r.segments.push_back(s);
    }
    return r;
  };
  return {chain("A", {3, 3, 3}), chain("B", {4, 1, 2})};
}

}  // namespace agentsched
