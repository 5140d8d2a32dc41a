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

#include "agentsched/kvcache.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "agentsched/errors.h"
#include "test_support.h"

namespace agentsched {
namespace {

// Linear 0.2 ms/token prefill so that recompute(1000) is 0.2 s.
Predictor linear_predictor() {
  return Predictor(HardwareModel(PrefillProfile({{1000, 0.2}, {2000, 0.4}}), DecodeModel{}),
                   ApiLatencyTable::defaults());
}

CacheStrategy reference_argmin(double p, double d, double s) {
  const double m = std::min({p, d, s});
  if (s == m) return CacheStrategy::Swap;
  if (d == m) return CacheStrategy::Discard;
  return CacheStrategy::Preserve;
}

TEST(WasteTest, ImageGenExampleChoosesSwap) {
  const auto w = estimate_waste(20.03, 1000, 500, 0.2, 0.05, 1.0);
  EXPECT_DOUBLE_EQ(w.preserve, 20030.0);
  EXPECT_DOUBLE_EQ(w.discard, 100.0);
  EXPECT_DOUBLE_EQ(w.swap, 50.0);
  EXPECT_EQ(w.chosen, CacheStrategy::Swap);
}

TEST(WasteTest, ZeroApiTimePreserves) {
  const auto w = estimate_waste(0.0, 1000, 500, 0.2, 0.05, 1.0);
  EXPECT_EQ(w.preserve, 0.0);
  EXPECT_EQ(w.chosen, CacheStrategy::Preserve);
}

TEST(WasteTest, EmptyBatchTiesResolveToSwap) {
  const auto w = estimate_waste(3.0, 1000, 0, 0.2, 0.05, 1.0);
  EXPECT_EQ(w.discard, 0.0);
  EXPECT_EQ(w.swap, 0.0);
  EXPECT_GT(w.preserve, 0.0);
  EXPECT_EQ(w.chosen, CacheStrategy::Swap);
}

TEST(WasteTest, AllZeroTiesResolveToSwap) {
  EXPECT_EQ(estimate_waste(0, 0, 0, 0, 0, 1.0).chosen, CacheStrategy::Swap);
}

TEST(WasteTest, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(estimate_waste(-1, 1, 1, 1, 1, 1), DomainError);
  EXPECT_THROW(estimate_waste(1, -1, 1, 1, 1, 1), DomainError);
  EXPECT_THROW(estimate_waste(1, 1, -1, 1, 1, 1), DomainError);
  EXPECT_THROW(estimate_waste(1, 1, 1, -1, 1, 1), DomainError);
  EXPECT_THROW(estimate_waste(1, 1, 1, 1, -1, 1), DomainError);
  EXPECT_THROW(estimate_waste(1, 1, 1, 1, 1, -1), DomainError);
  EXPECT_THROW(estimate_waste(std::numeric_limits<double>::infinity(), 1, 1, 1, 1, 1),
               DomainError);
  EXPECT_THROW(estimate_waste(std::nan(""), 1, 1, 1, 1, 1), DomainError);
}

TEST(WasteTest, GridMatchesProductsAndArgmin) {
  const double t_api[] = {0.0, 9e-5, 0.5, 3.0, 20.03, 28.6};
  const double c_self[] = {0, 1, 128, 1000, 4096};
  const double c_batch[] = {0, 1, 500, 1000, 8192};
  const double t_rec[] = {0.0, 0.001, 0.05, 0.2, 1.0};
  const double t_swap[] = {0.0, 0.001, 0.025, 0.05, 0.5};
  const double bytes[] = {1.0, 458752.0};
  int count = 0;
  for (double a : t_api)
    for (double cs : c_self)
      for (double cb : c_batch)
        for (double r : t_rec)
          for (double s : t_swap)
            for (double m : bytes) {
              const auto w = estimate_waste(a, cs, cb, r, s, m);
              ASSERT_EQ(w.preserve, a * cs * m);
              ASSERT_EQ(w.discard, r * cb * m);
              ASSERT_EQ(w.swap, 2.0 * s * cb * m);
              ASSERT_EQ(w.chosen, reference_argmin(w.preserve, w.discard, w.swap));
              ASSERT_LE(w.of(w.chosen), w.preserve);
              ASSERT_LE(w.of(w.chosen), w.discard);
              ASSERT_LE(w.of(w.chosen), w.swap);
              ++count;
            }
  EXPECT_EQ(count, 6 * 5 * 5 * 5 * 5 * 2);
}

struct YieldFixture {
  RequestSpec spec;
  RequestState state;

  YieldFixture(ApiCategory category, std::int64_t kv) {
    SegmentSpec first{1, 10, 10, category, 1.0, std::nullopt};
    SegmentSpec last{2, 10, 10, ApiCategory::None, 0.0, std::nullopt};
    spec.id = "R";
    spec.segments = {first, last};
    state.spec = &spec;
    state.kv_tokens = kv;
    state.context_tokens = kv;
    state.cache_location = CacheLocation::GPU;
    state.phase = Phase::ApiWait;
  }
};

MemoryConfig adaptive(std::int64_t capacity) {
  MemoryConfig m;
  m.capacity_tokens = capacity;
  m.swap_bandwidth = 20000.0;
  m.per_token_bytes = 1.0;
  m.mode = CacheMode::Adaptive;
  return m;
}

TEST(CacheManagerTest, BelowWatermarkPreserves) {
  const Predictor p = linear_predictor();
  KvCacheManager mgr(adaptive(2500), p);
  YieldFixture f(ApiCategory::ImageGen, 1000);
  mgr.memory().allocate(1000);  // 40%
  const auto d = mgr.on_api_yield(f.state, 500, 0.0);
  EXPECT_EQ(d.strategy, CacheStrategy::Preserve);
  EXPECT_EQ(mgr.memory().resident(), 1000);
  EXPECT_TRUE(mgr.audits().empty());
}

TEST(CacheManagerTest, AboveWatermarkSwapsAndFreesAfterTransfer) {
  const Predictor p = linear_predictor();
  KvCacheManager mgr(adaptive(1050), p);
  YieldFixture f(ApiCategory::ImageGen, 1000);
  mgr.memory().allocate(1000);  // 95.2%
  const auto d = mgr.on_api_yield(f.state, 500, 0.0);
  ASSERT_EQ(d.strategy, CacheStrategy::Swap);
  EXPECT_DOUBLE_EQ(d.swap_out_delay, 0.05);
  ASSERT_EQ(mgr.audits().size(), 1u);
  const auto& a = mgr.audits()[0];
  EXPECT_DOUBLE_EQ(a.estimate.preserve, 20030.0);
  EXPECT_DOUBLE_EQ(a.estimate.discard, 100.0);
  EXPECT_DOUBLE_EQ(a.estimate.swap, 50.0);
  EXPECT_EQ(mgr.memory().resident(), 1000);  // still held during the copy
  mgr.complete_swap_out(f.state);
  EXPECT_EQ(mgr.memory().resident(), 0);
  EXPECT_EQ(mgr.memory().swapped(), 1000);
  EXPECT_EQ(f.state.cache_location, CacheLocation::Host);
  EXPECT_DOUBLE_EQ(mgr.resume_cost(f.state), 0.05);
  EXPECT_DOUBLE_EQ(mgr.begin_swap_in(f.state), 0.05);
  EXPECT_EQ(mgr.memory().resident(), 1000);
  EXPECT_NO_THROW(mgr.complete_swap_in(f.state));
}

TEST(CacheManagerTest, MathApiAboveWatermarkPreserves) {
  const Predictor p = linear_predictor();
  KvCacheManager mgr(adaptive(1050), p);
  YieldFixture f(ApiCategory::Math, 1000);
  mgr.memory().allocate(1000);
  const auto d = mgr.on_api_yield(f.state, 500, 0.0);
  EXPECT_EQ(d.strategy, CacheStrategy::Preserve);
  ASSERT_EQ(mgr.audits().size(), 1u);
  EXPECT_NEAR(mgr.audits()[0].estimate.preserve, 0.09, 1e-12);
}

TEST(CacheManagerTest, DiscardFreesImmediatelyAndRecomputesContext) {
  const Predictor p = linear_predictor();
  MemoryConfig m = adaptive(1050);
  m.mode = CacheMode::Discard;
  KvCacheManager mgr(m, p);
  YieldFixture f(ApiCategory::Search, 512);
  mgr.memory().allocate(512);
  EXPECT_EQ(mgr.on_api_yield(f.state, 0, 0.0).strategy, CacheStrategy::Discard);
  EXPECT_EQ(mgr.memory().resident(), 0);
  EXPECT_EQ(f.state.cache_location, CacheLocation::Dropped);
  f.state.current_segment = 2;
  // 512 context tokens plus the 10 new input tokens at 0.2 ms/token.
  EXPECT_NEAR(mgr.resume_cost(f.state), 522 * 0.0002, 1e-12);
}

TEST(CacheManagerTest, PreservedResumeIsFree) {
  const Predictor p = linear_predictor();
  MemoryConfig m = adaptive(4096);
  m.mode = CacheMode::Preserve;
  KvCacheManager mgr(m, p);
  YieldFixture f(ApiCategory::Chat, 1000);
  mgr.memory().allocate(1000);
  EXPECT_EQ(mgr.on_api_yield(f.state, 9999, 0.0).strategy, CacheStrategy::Preserve);
  EXPECT_EQ(mgr.resume_cost(f.state), 0.0);
}

TEST(CacheManagerTest, SwapTimeIsBandwidthDivision) {
  const Predictor p = linear_predictor();
  KvCacheManager mgr(adaptive(4096), p);
  EXPECT_DOUBLE_EQ(mgr.swap_time(1000), 0.05);
}

TEST(MemoryModelTest, CapacityAndMisuse) {
  MemoryConfig c;
  c.capacity_tokens = 1000;
  c.availability = 0.3;
  MemoryModel m(c);
  EXPECT_EQ(m.capacity(), 300);
  m.allocate(300);
  EXPECT_THROW(m.allocate(1), SimulationError);
  EXPECT_THROW(m.release(301), SimulationError);
  m.release(300);
  EXPECT_THROW(m.from_host(1), SimulationError);
  c.watermark = 0.0;
  EXPECT_THROW(MemoryModel{c}, ConfigError);
  c = {};
  c.availability = 1.5;
  EXPECT_THROW(MemoryModel{c}, ConfigError);
}

TEST(MemoryModelTest, ParseCacheMode) {
  EXPECT_EQ(parse_cache_mode("adaptive"), CacheMode::Adaptive);
  EXPECT_EQ(parse_cache_mode("swap"), CacheMode::Swap);
  EXPECT_THROW(parse_cache_mode("lru"), ConfigError);
}

}  // namespace
}  // namespace agentsched
