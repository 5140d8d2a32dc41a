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

#include "agentsched/gantt.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "agentsched/errors.h"

namespace agentsched {

std::string serialize_gantt(const RunReport& report) {
  std::string out =
      nlohmann::ordered_json{{"schema", kGanttSchema}, {"cost_model", report.cost_model}}.dump();
  out += '\n';
  for (const auto& g : report.gantt) {
    out += nlohmann::ordered_json{{"request_id", g.request_id},
                                  {"segment_index", g.segment_index},
                                  {"kind", to_string(g.kind)},
                                  {"start", g.start},
                                  {"end", g.end}}
               .dump();
    out += '\n';
  }
  return out;
}

GanttTrace parse_gantt(std::string_view text) {
  GanttTrace trace;
  bool header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    const auto line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!header) {
        if (j.at("schema").get<std::string>() != kGanttSchema)
          throw ParseError("unsupported gantt schema", line_no);
        trace.cost_model = j.at("cost_model").get<std::string>();
        header = true;
        continue;
      }
      trace.entries.push_back({j.at("request_id").get<std::string>(),
                               j.at("segment_index").get<int>(),
                               parse_span_kind(j.at("kind").get<std::string>()),
                               j.at("start").get<double>(), j.at("end").get<double>()});
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(e.what(), line_no);
    } catch (const std::exception& e) {
      throw ParseError(std::string("malformed span: ") + e.what(), line_no);
    }
  }
  return trace;
}

GanttTrace load_gantt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::filesystem::filesystem_error(
      "cannot open gantt trace", path, std::make_error_code(std::errc::no_such_file_or_directory));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_gantt(buf.str());
}

std::string gantt_csv(const GanttTrace& trace) {
  std::string out = "request_id,segment_index,kind,start,end\n";
  for (const auto& g : trace.entries)
    out += fmt::format("{},{},{},{},{}\n", g.request_id, g.segment_index, to_string(g.kind),
                       g.start, g.end);
  return out;
}

void check_integrity(const GanttTrace& trace) {
  std::vector<const GanttEntry*> compute;
  for (const auto& g : trace.entries) {
    if (g.end < g.start)
      throw ValidationError(fmt::format("integrity: span of {} ends before it starts",
                                        g.request_id));
    if (g.kind == SpanKind::Compute) compute.push_back(&g);
  }
  if (trace.cost_model != "serial") return;
  std::sort(compute.begin(), compute.end(),
            [](const GanttEntry* a, const GanttEntry* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < compute.size(); ++i)
    if (compute[i]->start < compute[i - 1]->end)
      throw ValidationError(fmt::format(
          "integrity: compute spans of {} and {} overlap on the serial engine at {}",
          compute[i - 1]->request_id, compute[i]->request_id, compute[i]->start));
}

std::vector<GanttLane> compute_lanes(const GanttTrace& trace) {
  std::vector<const GanttEntry*> compute;
  for (const auto& g : trace.entries)
    if (g.kind == SpanKind::Compute) compute.push_back(&g);
  std::stable_sort(compute.begin(), compute.end(),
                   [](const GanttEntry* a, const GanttEntry* b) { return a->start < b->start; });
  std::vector<GanttLane> lanes;
  for (const auto* g : compute) {
    auto it = std::find_if(lanes.begin(), lanes.end(),
                           [&](const GanttLane& l) { return l.request_id == g->request_id; });
    if (it == lanes.end()) {
      lanes.push_back({g->request_id, {}});
      it = std::prev(lanes.end());
    }
    it->compute.emplace_back(g->start, g->end);
  }
  return lanes;
}

std::string render_gantt(const GanttTrace& trace, int width) {
  const auto lanes = compute_lanes(trace);
  if (lanes.empty()) return "(empty trace)\n";
  std::size_t label = 0;
  double horizon = 0.0;
  for (const auto& l : lanes) {
    label = std::max(label, l.request_id.size());
    for (const auto& [s, e] : l.compute) horizon = std::max(horizon, e);
  }
  for (const auto& g : trace.entries) horizon = std::max(horizon, g.end);

  std::string out;
  for (const auto& l : lanes) {
    out += fmt::format("{:<{}} :", l.request_id, label);
    for (std::size_t i = 0; i < l.compute.size(); ++i)
      out += fmt::format("{}[{:g}-{:g}]", i == 0 ? " " : ",", l.compute[i].first,
                         l.compute[i].second);
    out += '\n';
  }
  out += '\n';

  width = std::max(width, 8);
  const double scale = horizon > 0.0 ? static_cast<double>(width) / horizon : 0.0;
  auto column = [&](double t) {
    return std::clamp(static_cast<int>(std::lround(t * scale)), 0, width);
  };
  for (const auto& l : lanes) {
    std::string row(static_cast<std::size_t>(width), '.');
    for (const auto& g : trace.entries) {
      if (g.request_id != l.request_id) continue;
      const char mark = g.kind == SpanKind::Compute ? '#'
                        : g.kind == SpanKind::Api   ? '~'
                        : g.kind == SpanKind::Swap  ? 's'
                                                    : '.';
      if (mark == '.') continue;
      for (int c = column(g.start); c < column(g.end); ++c) row[static_cast<std::size_t>(c)] = mark;
    }
    out += fmt::format("{:<{}} |{}|\n", l.request_id, label, row);
  }
  out += fmt::format("{:<{}}  0{:>{}}\n", "", label, fmt::format("{:g}", horizon), width - 1);
  out += "legend: # compute  ~ api  s swap  . idle/ready\n";
  return out;
}

}  // namespace agentsched
