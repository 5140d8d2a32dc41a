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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "agentsched/errors.h"

namespace agentsched {
namespace {

TEST(GenerateTest, ZeroRateGivesEmptyWorkload) {
  auto cfg = WorkloadConfig::defaults();
  cfg.qps = 0.0;
  cfg.duration = 1000.0;
  EXPECT_TRUE(generate(cfg).empty());
}

TEST(GenerateTest, SameSeedSameWorkload) {
  auto cfg = WorkloadConfig::defaults();
  cfg.seed = 42;
  cfg.qps = 3.0;
  cfg.duration = 200.0;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(serialize_trace(a), serialize_trace(b));
  cfg.seed = 43;
  EXPECT_NE(serialize_trace(a), serialize_trace(generate(cfg)));
}

TEST(GenerateTest, MathApiMeanMatchesCategoryMean) {
  auto cfg = WorkloadConfig::defaults();
  cfg.category_mix = {{ApiCategory::Math, 1.0}};
  cfg.categories[ApiCategory::Math].api_latency = {9e-5, 0.3};
  cfg.qps = 20.0;
  cfg.duration = 100.0;
  cfg.seed = 7;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : generate(cfg))
    for (const auto& s : r.segments)
      if (s.api_category == ApiCategory::Math) {
        sum += s.api_duration;
        ++n;
      }
  ASSERT_GE(n, 1000u);
  EXPECT_NEAR(sum / static_cast<double>(n), 9e-5, 0.1 * 9e-5);
}

TEST(GenerateTest, InterArrivalsAreExponential) {
  auto cfg = WorkloadConfig::defaults();
  cfg.qps = 10.0;
  cfg.duration = 1000.0;
  cfg.seed = 2024;
  const auto w = generate(cfg);
  ASSERT_GT(w.size(), 9000u);
  std::vector<double> gaps;
  double prev = 0.0;
  for (const auto& r : w) {
    gaps.push_back(r.arrival_time - prev);
    prev = r.arrival_time;
  }
  std::sort(gaps.begin(), gaps.end());
  const double n = static_cast<double>(gaps.size());
  double d = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double cdf = 1.0 - std::exp(-cfg.qps * gaps[i]);
    d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(n));  // 1% critical value
}

TEST(GenerateTest, RandomConfigsSatisfyInvariants) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto cfg = WorkloadConfig::defaults();
    cfg.seed = rng();
    cfg.qps = 0.1 + 5.0 * u(rng);
    cfg.duration = 20.0 * u(rng);
    std::vector<double> w(7);
    double total = 0.0;
    for (auto& x : w) total += (x = u(rng));
    cfg.category_mix.clear();
    for (std::size_t i = 0; i < w.size(); ++i) cfg.category_mix[kAllApiCategories[i]] = w[i] / total;
    const auto workload = generate(cfg);
    EXPECT_NO_THROW(validate(workload));
    for (std::size_t i = 1; i < workload.size(); ++i)
      EXPECT_LE(workload[i - 1].arrival_time, workload[i].arrival_time);
  }
}

TEST(GenerateTest, RejectsBadConfig) {
  auto cfg = WorkloadConfig::defaults();
  cfg.category_mix = {{ApiCategory::Math, 0.5}, {ApiCategory::Chat, 0.4}};
  EXPECT_THROW(generate(cfg), ConfigError);
  cfg = WorkloadConfig::defaults();
  cfg.qps = -1.0;
  EXPECT_THROW(generate(cfg), ConfigError);
  cfg = WorkloadConfig::defaults();
  cfg.category_mix = {{ApiCategory::Math, 1.2}, {ApiCategory::Chat, -0.2}};
  EXPECT_THROW(generate(cfg), ConfigError);
}

TEST(TraceTest, Figure2RoundTrip) {
  const auto w = figure2_workload();
  EXPECT_EQ(parse_trace(serialize_trace(w)), w);

  const auto path = std::filesystem::temp_directory_path() / "agentsched_fig2_trace.jsonl";
  save_trace(w, path);
  EXPECT_EQ(load_trace(path), w);
  std::filesystem::remove(path);
}

TEST(TraceTest, GeneratedRoundTripIsExact) {
  auto cfg = WorkloadConfig::defaults();
  cfg.qps = 2.0;
  cfg.duration = 100.0;
  const auto w = generate(cfg);
  EXPECT_EQ(parse_trace(serialize_trace(w)), w);
}

TEST(TraceTest, SegmentIndexGapIsParseErrorWithLine) {
  std::string text = serialize_trace(figure2_workload());
  const auto pos = text.find("\"index\":2", text.find('\n'));
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 9, "\"index\":5");
  try {
    parse_trace(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(TraceTest, EmptyFileIsEmptyWorkload) {
  EXPECT_TRUE(parse_trace("").empty());
  EXPECT_TRUE(parse_trace("\n\n").empty());
}

TEST(TraceTest, DuplicateIdIsValidationError) {
  const auto w = figure2_workload();
  const std::string text = serialize_trace({w[0], w[0]});
  EXPECT_THROW(parse_trace(text), ValidationError);
}

TEST(TraceTest, MalformedRecordNamesLine) {
  const std::string text = serialize_trace(figure2_workload()) + "{not json}\n";
  try {
    parse_trace(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Figure2Test, Structure) {
  const auto w = figure2_workload();
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].id, "A");
  EXPECT_EQ(w[1].id, "B");
  EXPECT_EQ(w[0].segments.size(), 3u);
  EXPECT_EQ(w[1].segments.size(), 3u);
  double a = 0.0, b = 0.0;
  for (const auto& s : w[0].segments) a += *s.direct_compute_time;
  for (const auto& s : w[1].segments) b += *s.direct_compute_time;
  EXPECT_EQ(a, 9.0);
  EXPECT_EQ(b, 7.0);
  EXPECT_EQ(w[0].arrival_time, 0.0);
  EXPECT_EQ(w[1].arrival_time, 0.0);
  EXPECT_NO_THROW(validate(w));
}

TEST(ValidateTest, LastSegmentMustNotCallApi) {
  auto w = figure2_workload();
  w[0].segments.back().api_category = ApiCategory::Search;
  w[0].segments.back().api_duration = 1.0;
  EXPECT_THROW(validate(w), ValidationError);
}

}  // namespace
}  // namespace agentsched
