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

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agentsched/metrics.h"

namespace agentsched {

inline constexpr std::string_view kGanttSchema = "agentsched.gantt/1";

struct GanttTrace {
  std::string cost_model;
  std::vector<GanttEntry> entries;
};

// Header line {"schema", "cost_model"} followed by one span per line.
std::string serialize_gantt(const RunReport& report);
GanttTrace parse_gantt(std::string_view text);  // throws ParseError
GanttTrace load_gantt(const std::filesystem::path& path);

// request_id,segment_index,kind,start,end
std::string gantt_csv(const GanttTrace& trace);

// Throws ValidationError for reversed spans, or overlapping compute spans
// when the trace came from the serial cost model.
void check_integrity(const GanttTrace& trace);

struct GanttLane {
  std::string request_id;
  std::vector<std::pair<double, double>> compute;
};

// One lane per request in order of first compute, spans sorted by start.
std::vector<GanttLane> compute_lanes(const GanttTrace& trace);

// Span lists per lane followed by a character chart `width` columns wide.
std::string render_gantt(const GanttTrace& trace, int width = 64);

}  // namespace agentsched
