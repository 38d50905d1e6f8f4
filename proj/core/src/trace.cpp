/* Copyright 2026 The spotsim Authors. All Rights Reserved.

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
#include "spotsim/trace.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "spotsim/errors.hpp"

namespace spotsim {

std::vector<TraceEvent> parse_trace(std::istream& in, const std::string& source,
                                    const TraceDefaults& defaults) {
  std::vector<TraceEvent> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, n, e.what());
    }
    try {
      TraceEvent e;
      e.t = j.at("t").get<double>();
      e.id = j.at("id").get<std::string>();
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "preempt") {
        e.kind = TraceKind::kPreempt;
        e.grace = j.value("grace", defaults.grace);
        if (e.grace < 0) throw ParseError(source, n, "negative grace");
      } else if (kind == "acquire") {
        e.kind = TraceKind::kAcquire;
        e.ready_in = j.value("ready_in", defaults.ready_in);
        e.itype = instance_kind_from_string(j.value("itype", std::string("spot")));
        if (e.ready_in < 0) throw ParseError(source, n, "negative ready_in");
      } else {
        throw ParseError(source, n, "unknown event kind \"" + kind + "\"");
      }
      if (e.t < 0) throw ParseError(source, n, "negative time");
      if (!out.empty() && e.t < out.back().t) throw ParseError(source, n, "events out of order");
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, n, e.what());
    } catch (const ConfigError& e) {
      throw ParseError(source, n, e.what());
    }
  }
  return out;
}

std::vector<TraceEvent> load_trace(const std::string& path, const TraceDefaults& defaults) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file " + path);
  return parse_trace(in, path, defaults);
}

}  // namespace spotsim
