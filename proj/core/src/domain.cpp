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
#include "spotsim/domain.hpp"

#include <algorithm>
#include <map>

#include "spotsim/errors.hpp"

namespace spotsim {

std::string ParallelConfig::shape() const {
  return "(" + std::to_string(D) + "," + std::to_string(P) + "," + std::to_string(M) + ")";
}

std::string ParallelConfig::to_string() const {
  return "(" + std::to_string(D) + "," + std::to_string(P) + "," + std::to_string(M) + "," +
         std::to_string(B) + ")";
}

int instances_needed(const ParallelConfig& c, int gpus_per_instance) {
  if (gpus_per_instance < 1) throw DomainError("gpus_per_instance must be >= 1");
  return (c.gpus() + gpus_per_instance - 1) / gpus_per_instance;
}

bool valid_position(const ParallelConfig& c, const TopologyPosition& pos) {
  return pos.d >= 0 && pos.d < c.D && pos.p >= 0 && pos.p < c.P && pos.m >= 0 && pos.m < c.M;
}

int linear_index(const ParallelConfig& c, const TopologyPosition& pos) {
  if (!valid_position(c, pos)) throw DomainError("position outside config " + c.to_string());
  return (pos.d * c.P + pos.p) * c.M + pos.m;
}

TopologyPosition position_at(const ParallelConfig& c, int index) {
  if (index < 0 || index >= c.gpus()) throw DomainError("position index out of range");
  return TopologyPosition{index / (c.P * c.M), (index / c.M) % c.P, index % c.M};
}

std::vector<TopologyPosition> all_positions(const ParallelConfig& c) {
  std::vector<TopologyPosition> out;
  out.reserve(c.gpus());
  for (int i = 0; i < c.gpus(); ++i) out.push_back(position_at(c, i));
  return out;
}

LayerBlock stage_layers(int num_layers, int num_stages, int stage) {
  if (num_stages < 1 || stage < 0 || stage >= num_stages)
    throw DomainError("stage index out of range");
  const int base = num_layers / num_stages;
  const int extra = num_layers % num_stages;
  const int first = stage * base + std::min(stage, extra);
  const int size = base + (stage < extra ? 1 : 0);
  return LayerBlock{first, first + size};
}

int stage_of_layer(int num_layers, int num_stages, int layer) {
  for (int p = 0; p < num_stages; ++p) {
    LayerBlock b = stage_layers(num_layers, num_stages, p);
    if (layer >= b.first && layer < b.last) return p;
  }
  throw DomainError("layer index out of range");
}

Interval shard_interval(int m, int M) {
  if (M < 1 || m < 0 || m >= M) throw DomainError("shard index out of range");
  return Interval{Fraction(m, M), Fraction(m + 1, M)};
}

double model_shard_bytes(const ModelShard& s, const ModelSpec& model) {
  return model.bytes_per_layer * s.range.length().value();
}

double cache_shard_bytes(const CacheShard& s, const ModelSpec& model) {
  return model.kv_bytes_per_token_per_layer * s.tokens_cached * s.range.length().value();
}

double inventory_bytes(const ContextInventory& inv, const ModelSpec& model) {
  double total = 0.0;
  for (const auto& s : inv.model_shards) total += model_shard_bytes(s, model);
  for (const auto& s : inv.cache_shards) total += cache_shard_bytes(s, model);
  return total;
}

ContextInventory required_context(const ParallelConfig& config, const TopologyPosition& pos,
                                  const ModelSpec& model) {
  if (!valid_position(config, pos))
    throw DomainError("invalid position for config " + config.to_string());
  if (config.P > model.num_layers) throw DomainError("more stages than layers");
  ContextInventory inv;
  const LayerBlock block = stage_layers(model.num_layers, config.P, pos.p);
  const Interval range = shard_interval(pos.m, config.M);
  for (int l = block.first; l < block.last; ++l) inv.model_shards.push_back({l, range});
  return inv;
}

ContextInventory required_context_with_cache(const ParallelConfig& config,
                                             const TopologyPosition& pos,
                                             const ModelSpec& model,
                                             const std::vector<CachedRequest>& requests) {
  ContextInventory inv = required_context(config, pos, model);
  const Interval range = shard_interval(pos.m, config.M);
  for (const CachedRequest& r : requests) {
    if (r.tokens_cached <= 0) continue;
    for (const ModelShard& s : inv.model_shards)
      inv.cache_shards.push_back({r.id, s.layer, range, r.tokens_cached});
  }
  return inv;
}

double overlap_bytes(const ContextInventory& a, const ContextInventory& b,
                     const ModelSpec& model) {
  double total = 0.0;
  std::multimap<int, const ModelShard*> by_layer;
  for (const auto& s : b.model_shards) by_layer.emplace(s.layer, &s);
  for (const auto& s : a.model_shards) {
    auto [lo, hi] = by_layer.equal_range(s.layer);
    for (auto it = lo; it != hi; ++it)
      total += model.bytes_per_layer * intersect(s.range, it->second->range).length().value();
  }
  std::multimap<std::pair<RequestId, int>, const CacheShard*> by_key;
  for (const auto& s : b.cache_shards) by_key.emplace(std::make_pair(s.request, s.layer), &s);
  for (const auto& s : a.cache_shards) {
    auto [lo, hi] = by_key.equal_range({s.request, s.layer});
    for (auto it = lo; it != hi; ++it) {
      const int tokens = std::min(s.tokens_cached, it->second->tokens_cached);
      total += model.kv_bytes_per_token_per_layer * tokens *
               intersect(s.range, it->second->range).length().value();
    }
  }
  return total;
}

std::string to_string(InstanceKind k) {
  return k == InstanceKind::kSpot ? "spot" : "ondemand";
}

InstanceKind instance_kind_from_string(const std::string& s) {
  if (s == "spot") return InstanceKind::kSpot;
  if (s == "ondemand" || s == "on-demand" || s == "on_demand") return InstanceKind::kOnDemand;
  throw ConfigError("unknown instance kind '" + s + "'");
}

int ClusterState::available_count() const {
  return static_cast<int>(std::count_if(instances.begin(), instances.end(), [](const auto& i) {
    return i.status == InstanceStatus::kAllocating || i.status == InstanceStatus::kActive;
  }));
}

bool ClusterState::consistent() const {
  for (const auto& i : instances) {
    const bool grace = i.status == InstanceStatus::kGracePreempting;
    if (grace != i.deadline.has_value()) return false;
  }
  return true;
}

}  // namespace spotsim
