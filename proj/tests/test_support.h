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

#include <initializer_list>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "agentsched/kvcache.h"
#include "agentsched/metrics.h"
#include "agentsched/predictor.h"
#include "agentsched/scheduler.h"
#include "agentsched/simulator.h"
#include "agentsched/workload.h"

namespace agentsched::testing {

struct ChainSegment {
  double compute;
  double api = 0.0;
};

// Request whose segments carry direct compute times.
inline RequestSpec chain(std::string id, double arrival, std::vector<ChainSegment> segs) {
  RequestSpec r;
  r.id = std::move(id);
  r.arrival_time = arrival;
  int index = 1;
  for (const auto& s : segs) {
    SegmentSpec seg;
    seg.index = index++;
    seg.n_in = 1;
    seg.n_gen = 1;
    seg.direct_compute_time = s.compute;
    seg.api_duration = s.api;
    seg.api_category = s.api > 0.0 ? ApiCategory::Search : ApiCategory::None;
    r.segments.push_back(seg);
  }
  return r;
}

inline MemoryConfig roomy_memory(CacheMode mode = CacheMode::Preserve) {
  MemoryConfig m;
  m.capacity_tokens = std::int64_t{1} << 40;
  m.mode = mode;
  return m;
}

inline RunReport run_policy(const Workload& w, std::string_view policy, SimConfig sim = {},
                            MemoryConfig memory = roomy_memory(), MlfqConfig mlfq = {},
                            const Predictor& predictor = Predictor::defaults()) {
  auto p = make_policy(policy, predictor, mlfq);
  return run(w, *p, predictor, predictor.hardware(), memory, sim);
}

inline double jct_of(const RunReport& r, const std::string& id) {
  for (const auto& rec : r.per_request)
    if (rec.id == id) return rec.jct;
  return std::numeric_limits<double>::quiet_NaN();
}

// Up to `max_requests` requests of up to `max_segments` segments with
// integer compute times in [1, 5]; optional integer API gaps and arrivals.
inline Workload random_tiny_instance(std::mt19937_64& rng, int max_requests, int max_segments,
                                     bool with_api, bool with_arrivals) {
  std::uniform_int_distribution<int> nreq(1, max_requests), nseg(1, max_segments), dur(1, 5),
      gap(0, 4), arr(0, 6);
  Workload w;
  const int n = nreq(rng);
  for (int i = 0; i < n; ++i) {
    std::vector<ChainSegment> segs;
    const int k = nseg(rng);
    for (int j = 0; j < k; ++j)
      segs.push_back({static_cast<double>(dur(rng)),
                      (with_api && j + 1 < k) ? static_cast<double>(gap(rng)) : 0.0});
    w.push_back(chain(std::string(1, static_cast<char>('A' + i)),
                      with_arrivals ? static_cast<double>(arr(rng)) : 0.0, segs));
  }
  return w;
}

}  // namespace agentsched::testing
