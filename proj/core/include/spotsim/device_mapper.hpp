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
#ifndef SPOTSIM_DEVICE_MAPPER_HPP_
#define SPOTSIM_DEVICE_MAPPER_HPP_

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spotsim/domain.hpp"
#include "spotsim/km_match.hpp"
#include "spotsim/migration_plan.hpp"

namespace spotsim {

struct GpuNode {
  GpuId id;
  ContextInventory inventory;
};

struct BipartiteGraph {
  std::vector<GpuId> left;
  std::vector<TopologyPosition> right;
  WeightMatrix weights;  // reusable bytes, left x right
};

// Requests each new pipeline inherits, indexed by new pipeline d. Pipelines
// past the end inherit nothing.
using PipelineRequests = std::vector<std::vector<CachedRequest>>;

struct DeviceMapping {
  ParallelConfig config;
  std::vector<std::pair<GpuId, TopologyPosition>> assignment;  // sorted by position
  double total_weight = 0.0;

  std::optional<GpuId> gpu_at(const TopologyPosition& pos) const;
  bool complete() const { return static_cast<int>(assignment.size()) == config.gpus(); }
};

// Default inheritance: new pipeline d keeps old pipeline d's requests for
// d < min(D_old, D_new).
PipelineRequests identity_inheritance(const PipelineRequests& old_pipelines, int new_d);

BipartiteGraph build_graph(std::span<const GpuNode> gpus, const ParallelConfig& next,
                           const ModelSpec& model, const PipelineRequests& inherited);

DeviceMapping mapping_from_assignment(const BipartiteGraph& graph, const ParallelConfig& next,
                                      const Assignment& assignment);

// Flat single-step mapping: build_graph + km_match.
DeviceMapping km_device_mapping(std::span<const GpuNode> gpus, const ParallelConfig& next,
                                const ModelSpec& model, const PipelineRequests& inherited);

enum class FusedWeightRule { kMax, kSum };

struct InstanceGpus {
  int instance = 0;
  std::vector<ContextInventory> gpus;  // exactly G entries
};

// Two-step mapping for multi-GPU instances. GPUs are fused per instance in
// groups of min(G, M) and positions per tensor-parallel group of the same
// size; each fused pair is matched internally, the fused edge takes the max
// (or sum) of its inner matched weights, and a second KM runs on the fused
// graph. Throws FusingError when the group sizes do not divide.
DeviceMapping map_devices(std::span<const InstanceGpus> instances, const ParallelConfig& next,
                          const ModelSpec& model, int gpus_per_instance,
                          const PipelineRequests& inherited,
                          FusedWeightRule rule = FusedWeightRule::kMax);

// Positions in linear order onto GPUs in (instance, gpu) order, ignoring
// any context already resident.
DeviceMapping naive_mapping(std::span<const InstanceGpus> instances, const ParallelConfig& next);

struct RequestProgress {
  RequestId id = 0;
  int tokens_generated = 0;
};

// Keeps at most `capacity` requests, preferring the most decoded (ties to the
// lower id). Result is sorted by id.
std::vector<RequestId> retain_cache(std::span<const RequestProgress> active, int capacity);

// Capacity form: shrinks only when D_next * B_next < D_t * B_t.
std::vector<RequestId> retain_cache(std::span<const RequestProgress> active,
                                    const ParallelConfig& current, const ParallelConfig& next);

}  // namespace spotsim

#endif  // SPOTSIM_DEVICE_MAPPER_HPP_
