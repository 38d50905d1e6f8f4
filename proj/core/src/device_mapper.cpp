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
#include "spotsim/device_mapper.hpp"

#include <algorithm>
#include <map>

#include "spotsim/errors.hpp"

namespace spotsim {

std::optional<GpuId> DeviceMapping::gpu_at(const TopologyPosition& pos) const {
  for (const auto& [g, p] : assignment)
    if (p == pos) return g;
  return std::nullopt;
}

PipelineRequests identity_inheritance(const PipelineRequests& old_pipelines, int new_d) {
  PipelineRequests out(new_d);
  for (int d = 0; d < new_d && d < static_cast<int>(old_pipelines.size()); ++d)
    out[d] = old_pipelines[d];
  return out;
}

namespace {

const std::vector<CachedRequest>& requests_for(const PipelineRequests& inherited, int d) {
  static const std::vector<CachedRequest> kNone;
  return d < static_cast<int>(inherited.size()) ? inherited[d] : kNone;
}

void sort_assignment(DeviceMapping& m) {
  std::sort(m.assignment.begin(), m.assignment.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
}

}  // namespace

BipartiteGraph build_graph(std::span<const GpuNode> gpus, const ParallelConfig& next,
                           const ModelSpec& model, const PipelineRequests& inherited) {
  BipartiteGraph g;
  g.right = all_positions(next);
  g.weights = WeightMatrix(static_cast<int>(gpus.size()), static_cast<int>(g.right.size()));
  std::vector<ContextInventory> required;
  required.reserve(g.right.size());
  for (const TopologyPosition& pos : g.right)
    required.push_back(
        required_context_with_cache(next, pos, model, requests_for(inherited, pos.d)));
  for (std::size_t u = 0; u < gpus.size(); ++u) {
    g.left.push_back(gpus[u].id);
    if (gpus[u].inventory.empty()) continue;
    for (std::size_t v = 0; v < required.size(); ++v)
      g.weights.at(static_cast<int>(u), static_cast<int>(v)) =
          overlap_bytes(gpus[u].inventory, required[v], model);
  }
  return g;
}

DeviceMapping mapping_from_assignment(const BipartiteGraph& graph, const ParallelConfig& next,
                                      const Assignment& assignment) {
  DeviceMapping m;
  m.config = next;
  for (std::size_t u = 0; u < assignment.col_of_row.size(); ++u) {
    const int v = assignment.col_of_row[u];
    if (v < 0) continue;
    m.assignment.emplace_back(graph.left[u], graph.right[v]);
    m.total_weight += graph.weights.at(static_cast<int>(u), v);
  }
  sort_assignment(m);
  return m;
}

DeviceMapping km_device_mapping(std::span<const GpuNode> gpus, const ParallelConfig& next,
                                const ModelSpec& model, const PipelineRequests& inherited) {
  BipartiteGraph g = build_graph(gpus, next, model, inherited);
  return mapping_from_assignment(g, next, km_match(g.weights));
}

DeviceMapping map_devices(std::span<const InstanceGpus> instances, const ParallelConfig& next,
                          const ModelSpec& model, int gpus_per_instance,
                          const PipelineRequests& inherited, FusedWeightRule rule) {
  const int G = gpus_per_instance;
  if (G < 1) throw FusingError("gpus_per_instance must be >= 1");
  std::vector<GpuNode> flat;
  for (const InstanceGpus& inst : instances) {
    if (static_cast<int>(inst.gpus.size()) != G)
      throw FusingError("instance " + std::to_string(inst.instance) + " has " +
                        std::to_string(inst.gpus.size()) + " GPUs, expected " + std::to_string(G));
    for (int k = 0; k < G; ++k) flat.push_back({GpuId{inst.instance, k}, inst.gpus[k]});
  }
  if (G == 1) return km_device_mapping(flat, next, model, inherited);

  const int fuse = std::min(G, next.M);
  if (G % fuse != 0 || next.M % fuse != 0)
    throw FusingError("cannot fuse G=" + std::to_string(G) + " with M=" + std::to_string(next.M));

  const BipartiteGraph graph = build_graph(flat, next, model, inherited);
  const int groups_per_instance = G / fuse;
  const int groups_per_stage = next.M / fuse;
  const int left_fused = static_cast<int>(instances.size()) * groups_per_instance;
  const int right_fused = next.D * next.P * groups_per_stage;

  // Fused left node a covers flat rows [a*fuse, (a+1)*fuse): rows are laid
  // out instance-major, so this stays inside one instance. Fused right node b
  // covers columns [b*fuse, (b+1)*fuse) inside one (d, p) stage.
  WeightMatrix fused(left_fused, right_fused);
  std::vector<std::vector<Assignment>> inner(left_fused, std::vector<Assignment>(right_fused));
  for (int a = 0; a < left_fused; ++a) {
    for (int b = 0; b < right_fused; ++b) {
      WeightMatrix sub(fuse, fuse);
      for (int i = 0; i < fuse; ++i)
        for (int j = 0; j < fuse; ++j) sub.at(i, j) = graph.weights.at(a * fuse + i, b * fuse + j);
      Assignment in = km_match(sub);
      double w = 0.0;
      for (int i = 0; i < fuse; ++i) {
        const int j = in.col_of_row[i];
        if (j < 0) continue;
        const double e = sub.at(i, j);
        w = rule == FusedWeightRule::kMax ? std::max(w, e) : w + e;
      }
      fused.at(a, b) = w;
      inner[a][b] = std::move(in);
    }
  }
  const Assignment outer = km_match(fused);

  DeviceMapping m;
  m.config = next;
  for (int a = 0; a < left_fused; ++a) {
    const int b = outer.col_of_row[a];
    if (b < 0) continue;
    const Assignment& in = inner[a][b];
    for (int i = 0; i < fuse; ++i) {
      const int j = in.col_of_row[i];
      const int row = a * fuse + i;
      const int col = b * fuse + j;
      m.assignment.emplace_back(graph.left[row], graph.right[col]);
      m.total_weight += graph.weights.at(row, col);
    }
  }
  sort_assignment(m);
  return m;
}

DeviceMapping naive_mapping(std::span<const InstanceGpus> instances, const ParallelConfig& next) {
  DeviceMapping m;
  m.config = next;
  int index = 0;
  for (const InstanceGpus& inst : instances) {
    for (int k = 0; k < static_cast<int>(inst.gpus.size()) && index < next.gpus(); ++k)
      m.assignment.emplace_back(GpuId{inst.instance, k}, position_at(next, index++));
  }
  return m;
}

std::vector<RequestId> retain_cache(std::span<const RequestProgress> active, int capacity) {
  std::vector<RequestProgress> sorted(active.begin(), active.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.tokens_generated != b.tokens_generated ? a.tokens_generated > b.tokens_generated
                                                    : a.id < b.id;
  });
  if (capacity >= 0 && static_cast<int>(sorted.size()) > capacity) sorted.resize(capacity);
  std::vector<RequestId> kept;
  kept.reserve(sorted.size());
  for (const auto& r : sorted) kept.push_back(r.id);
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<RequestId> retain_cache(std::span<const RequestProgress> active,
                                    const ParallelConfig& current, const ParallelConfig& next) {
  const int old_capacity = current.D * current.B;
  const int new_capacity = next.D * next.B;
  return retain_cache(active, new_capacity < old_capacity ? new_capacity : -1);
}

}  // namespace spotsim
