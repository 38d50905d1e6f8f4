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
#ifndef SPOTSIM_MIGRATION_PLANNER_HPP_
#define SPOTSIM_MIGRATION_PLANNER_HPP_

#include <span>
#include <vector>

#include "spotsim/device_mapper.hpp"
#include "spotsim/domain.hpp"
#include "spotsim/migration_plan.hpp"

namespace spotsim {

// Per-instance buffer effect of migrating one layer: receivers are charged
// for the whole action, senders get `release` back once it finishes.
struct LayerTraffic {
  std::vector<double> recv;
  std::vector<double> release;
};

struct LayerOrder {
  std::vector<int> order;
  int admitted_first_pass = 0;
  bool exceeded = false;  // some deferred layer could not stay under U_max
};

// Memory-aware layer order. First pass admits layers in index order while
// every instance stays within u_max; the deferred rest are appended one at a
// time, each time taking the layer that minimizes the resulting max-instance
// usage (ties to the lower index).
LayerOrder memopt_layer_order(std::span<const LayerTraffic> layers,
                              const std::vector<double>& initial_usage, double u_max);

// Peak per-instance usage when layers run in `order` starting from `initial_usage`.
double order_peak(std::span<const LayerTraffic> layers, const std::vector<double>& initial_usage,
                  std::span<const int> order);

struct PlannerOptions {
  double u_max = 0.0;  // per instance; <= 0 or inf means unbounded
  int num_instances = 0;
  bool memory_optimized = true;  // false: plain index order
};

// Builds the progressive plan: one cache action, then layers in memopt order,
// with start_stage(p) right after the last action stage p depends on.
// `old_layout` lists every live GPU that may act as a source, with its
// current inventory; `requests` gives the cache each new pipeline must hold.
// Throws PlanningError if the mapping names a GPU missing from the layout.
MigrationPlan plan_migration(const DeviceMapping& mapping, std::span<const GpuNode> old_layout,
                             const ModelSpec& model, const PipelineRequests& requests,
                             const PlannerOptions& options);

// Replays receive charges and sender releases; per-instance peaks.
std::vector<double> simulate_buffer_usage(const MigrationPlan& plan, int num_instances);

// Applies every transfer of `plan` to `layout` and reports whether each
// mapped GPU then holds its required context (storage fetches count as held).
bool plan_realizes_mapping(const MigrationPlan& plan, std::span<const GpuNode> old_layout,
                           const DeviceMapping& mapping, const ModelSpec& model,
                           const PipelineRequests& requests);

}  // namespace spotsim

#endif  // SPOTSIM_MIGRATION_PLANNER_HPP_
