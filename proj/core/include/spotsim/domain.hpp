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
#ifndef SPOTSIM_DOMAIN_HPP_
#define SPOTSIM_DOMAIN_HPP_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spotsim/fraction.hpp"

namespace spotsim {

using RequestId = std::int64_t;

// C = (D, P, M, B): D data-parallel pipelines of P stages, each stage split
// into M tensor shards, with at most B requests per mini-batch.
struct ParallelConfig {
  int D = 1;
  int P = 1;
  int M = 1;
  int B = 1;

  int gpus() const { return D * P * M; }
  bool valid() const { return D >= 1 && P >= 1 && M >= 1 && B >= 1; }
  // (D,P,M) triple as printed in reconfiguration logs.
  std::string shape() const;
  std::string to_string() const;

  friend auto operator<=>(const ParallelConfig&, const ParallelConfig&) = default;
};

// Instances required to host a config when each instance carries `gpus_per_instance` GPUs.
int instances_needed(const ParallelConfig& c, int gpus_per_instance);

// Zero-based (d, p, m). Linear order is lexicographic, which is also the
// right-hand node order of the mapping graph.
struct TopologyPosition {
  int d = 0;
  int p = 0;
  int m = 0;

  friend auto operator<=>(const TopologyPosition&, const TopologyPosition&) = default;
};

bool valid_position(const ParallelConfig& c, const TopologyPosition& pos);
int linear_index(const ParallelConfig& c, const TopologyPosition& pos);
TopologyPosition position_at(const ParallelConfig& c, int index);
std::vector<TopologyPosition> all_positions(const ParallelConfig& c);

struct ModelSpec {
  std::string name;
  int num_layers = 1;
  double bytes_per_layer = 0.0;
  double kv_bytes_per_token_per_layer = 0.0;

  double total_param_bytes() const { return bytes_per_layer * num_layers; }
};

struct RequestSpec {
  RequestId id = 0;
  double arrival_time = 0.0;
  int s_in = 0;
  int s_out = 0;
  int tokens_generated = 0;
};

// Contiguous layer block [first, last) served by stage p; the first L mod P
// stages get one extra layer.
struct LayerBlock {
  int first = 0;
  int last = 0;
  int size() const { return last - first; }
};
LayerBlock stage_layers(int num_layers, int num_stages, int stage);
int stage_of_layer(int num_layers, int num_stages, int layer);

// Tensor shard interval [m/M, (m+1)/M).
Interval shard_interval(int m, int M);

struct ModelShard {
  int layer = 0;
  Interval range;
  friend bool operator==(const ModelShard&, const ModelShard&) = default;
};

struct CacheShard {
  RequestId request = 0;
  int layer = 0;
  Interval range;
  int tokens_cached = 0;
  friend bool operator==(const CacheShard&, const CacheShard&) = default;
};

// Context resident on a single GPU.
struct ContextInventory {
  std::vector<ModelShard> model_shards;
  std::vector<CacheShard> cache_shards;

  bool empty() const { return model_shards.empty() && cache_shards.empty(); }
};

double model_shard_bytes(const ModelShard& s, const ModelSpec& model);
double cache_shard_bytes(const CacheShard& s, const ModelSpec& model);
double inventory_bytes(const ContextInventory& inv, const ModelSpec& model);

// Model context a GPU at `pos` must hold under `config`. No cache shards.
ContextInventory required_context(const ParallelConfig& config, const TopologyPosition& pos,
                                  const ModelSpec& model);

// A request whose KV cache a pipeline holds, with the cached token count.
struct CachedRequest {
  RequestId id = 0;
  int tokens_cached = 0;
  friend bool operator==(const CachedRequest&, const CachedRequest&) = default;
};

// Model context plus the cache shards of `requests` for the stage/shard at pos.
ContextInventory required_context_with_cache(const ParallelConfig& config,
                                             const TopologyPosition& pos,
                                             const ModelSpec& model,
                                             const std::vector<CachedRequest>& requests);

// Reusable bytes between two inventories: per-layer interval intersections of
// model shards plus per-(request, layer) cache intersections weighted by the
// smaller token count.
double overlap_bytes(const ContextInventory& a, const ContextInventory& b,
                     const ModelSpec& model);

enum class InstanceKind { kSpot, kOnDemand };
enum class InstanceStatus { kAllocating, kActive, kGracePreempting, kReleased };

std::string to_string(InstanceKind k);
InstanceKind instance_kind_from_string(const std::string& s);

struct InstanceState {
  std::string id;
  InstanceKind kind = InstanceKind::kSpot;
  int gpus = 1;
  InstanceStatus status = InstanceStatus::kActive;
  std::optional<double> deadline;  // set iff status == kGracePreempting
  std::vector<ContextInventory> gpu_inventories;
};

struct ClusterState {
  double t = 0.0;
  std::vector<InstanceState> instances;

  // N_t: allocating and active instances; grace-period preemptions are excluded.
  int available_count() const;
  bool consistent() const;
};

}  // namespace spotsim

#endif  // SPOTSIM_DOMAIN_HPP_
