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
#ifndef SPOTSIM_SIMULATOR_HPP_
#define SPOTSIM_SIMULATOR_HPP_

#include <vector>

#include "spotsim/cost_model.hpp"
#include "spotsim/metrics.hpp"
#include "spotsim/sim_config.hpp"
#include "spotsim/trace.hpp"
#include "spotsim/workload.hpp"

namespace spotsim {

// Everything a run needs, already loaded.
struct SimInputs {
  SimConfig config;
  PerfProfile profile;
  std::vector<TraceEvent> trace;
  std::vector<Arrival> arrivals;
};

// Loads profile, trace and workload named by `config`.
SimInputs load_inputs(const SimConfig& config);

// Replays one run. Single threaded; identical inputs give identical reports.
MetricsReport simulate(const SimInputs& inputs);

inline MetricsReport run(const SimConfig& config) { return simulate(load_inputs(config)); }

}  // namespace spotsim

#endif  // SPOTSIM_SIMULATOR_HPP_
