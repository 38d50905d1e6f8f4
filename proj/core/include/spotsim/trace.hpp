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
#ifndef SPOTSIM_TRACE_HPP_
#define SPOTSIM_TRACE_HPP_

#include <istream>
#include <string>
#include <vector>

#include "spotsim/domain.hpp"

namespace spotsim {

enum class TraceKind { kPreempt, kAcquire };

struct TraceEvent {
  double t = 0.0;
  TraceKind kind = TraceKind::kPreempt;
  std::string id;
  double grace = 30.0;  // preempt
  InstanceKind itype = InstanceKind::kSpot;
  double ready_in = 120.0;  // acquire
};

struct TraceDefaults {
  double grace = 30.0;
  double ready_in = 120.0;
};

// JSON Lines availability trace. Throws ParseError naming the line.
std::vector<TraceEvent> parse_trace(std::istream& in, const std::string& source,
                                    const TraceDefaults& defaults = {});
std::vector<TraceEvent> load_trace(const std::string& path, const TraceDefaults& defaults = {});

}  // namespace spotsim

#endif  // SPOTSIM_TRACE_HPP_
