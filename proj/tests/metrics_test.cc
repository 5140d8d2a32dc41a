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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "agentsched/errors.h"
#include "test_support.h"

namespace agentsched {
namespace {

using testing::run_policy;

SimConfig serial_one() {
  SimConfig c;
  c.max_batch_size = 1;
  return c;
}

RunReport report_with(std::vector<double> jcts, std::uint64_t hash = 7) {
  RunReport r;
  r.workload_hash = hash;
  for (std::size_t i = 0; i < jcts.size(); ++i) {
    RequestRecord rec;
    rec.id = "r" + std::to_string(i);
    rec.jct = jcts[i];
    rec.finish = jcts[i];
    rec.total_compute = jcts[i];
    r.per_request.push_back(rec);
  }
  r.aggregates = summarize(r.per_request);
  return r;
}

TEST(MetricsTest, Figure2Averages) {
  EXPECT_EQ(avg_jct(run_policy(figure2_workload(), "fcfs", serial_one())), 15.0);
  EXPECT_EQ(avg_jct(run_policy(figure2_workload(), "las", serial_one())), 14.5);
  EXPECT_EQ(avg_jct(report_with({14, 16})), 15.0);
  EXPECT_THROW(avg_jct(RunReport{}), DomainError);
}

TEST(MetricsTest, DegradationRatioExamples) {
  EXPECT_NEAR(degradation_ratio(116.05, 176.34), 51.9, 0.1);
  EXPECT_NEAR(degradation_ratio(105.77, 122.88), 16.2, 0.1);
  EXPECT_DOUBLE_EQ(degradation_ratio(report_with({10}), report_with({15})), 50.0);
  EXPECT_THROW(degradation_ratio(0.0, 1.0), DomainError);
}

TEST(MetricsTest, PercentileNearestRank) {
  const std::vector<double> v{5, 1, 4, 2, 3};
  EXPECT_EQ(percentile(v, 0), 1.0);
  EXPECT_EQ(percentile(v, 50), 3.0);
  EXPECT_EQ(percentile(v, 95), 5.0);
  EXPECT_EQ(percentile(v, 100), 5.0);
  EXPECT_THROW(percentile({}, 50), DomainError);
  EXPECT_THROW(percentile(v, 101), DomainError);
}

TEST(MetricsTest, AggregatesBoundedAndPermutationInvariant) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 500.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> jcts(1 + trial % 40);
    for (auto& x : jcts) x = u(rng);
    const auto a = report_with(jcts).aggregates;
    const auto [lo, hi] = std::minmax_element(jcts.begin(), jcts.end());
    EXPECT_LE(*lo, a.p50);
    EXPECT_LE(a.p50, a.p95);
    EXPECT_LE(a.p95, a.p99);
    EXPECT_LE(a.p99, *hi);
    EXPECT_GE(a.avg_jct, *lo);
    EXPECT_LE(a.avg_jct, *hi);
    std::shuffle(jcts.begin(), jcts.end(), rng);
    const auto b = report_with(jcts).aggregates;
    EXPECT_EQ(a.p50, b.p50);
    EXPECT_EQ(a.p99, b.p99);
    EXPECT_NEAR(a.avg_jct, b.avg_jct, 1e-9);
  }
}

TEST(MetricsTest, CompareAgainstBaseline) {
  std::map<std::string, RunReport> reports{{"fcfs", report_with({14, 16})},
                                           {"sjf-request", report_with({7, 16})}};
  const auto t = compare(reports);
  EXPECT_EQ(t.baseline, "fcfs");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].policy, "fcfs");
  EXPECT_EQ(t.rows[0].delta_pct, 0.0);
  EXPECT_NEAR(t.rows[1].delta_pct, (11.5 - 15.0) / 15.0 * 100.0, 1e-12);
  EXPECT_NE(render_text(t).find("sjf-request"), std::string::npos);
  EXPECT_EQ(to_json(t)["rows"].size(), 2u);

  const auto fallback = compare(reports, "las");
  EXPECT_EQ(fallback.baseline, "fcfs");

  reports.emplace("las", report_with({1, 2}, 8));
  EXPECT_THROW(compare(reports), ValidationError);
  EXPECT_THROW(compare({}), ValidationError);
}

TEST(MetricsTest, ReportJsonRoundTrip) {
  MemoryConfig m;
  m.capacity_tokens = 8;
  m.watermark = 0.2;
  Workload w{testing::chain("A", 0.0, {{1, 2}, {1}}), testing::chain("B", 0.5, {{2, 1}, {1}})};
  w[0].segments[0].n_in = 3;
  const auto r = run_policy(w, "stateful-mlfq", {}, m);
  const auto j = to_json(r);
  EXPECT_EQ(j["schema"], kReportSchema);
  const auto back = report_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(back.workload_hash, r.workload_hash);
  EXPECT_EQ(back.gantt, r.gantt);
}

TEST(MetricsTest, ReportFromJsonRejectsGarbage) {
  EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"schema":"nope"})")), ParseError);
  EXPECT_THROW(report_from_json(nlohmann::json::array()), ParseError);
}

}  // namespace
}  // namespace agentsched
