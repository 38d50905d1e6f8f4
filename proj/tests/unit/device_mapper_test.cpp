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
#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "spotsim/device_mapper.hpp"
#include "spotsim/errors.hpp"

namespace spotsim {
namespace {

const ModelSpec kModel{"m", 12, 1e6, 10.0};

ParallelConfig random_config(std::mt19937& rng, int max_gpus, int max_b = 4) {
  for (;;) {
    ParallelConfig c{1 + static_cast<int>(rng() % 3), 1 + static_cast<int>(rng() % 4),
                     1 << (rng() % 3), 1 + static_cast<int>(rng() % max_b)};
    if (c.gpus() <= max_gpus) return c;
  }
}

PipelineRequests random_requests(std::mt19937& rng, int D) {
  PipelineRequests out(D);
  RequestId id = 0;
  for (int d = 0; d < D; ++d)
    for (int k = 0; k < static_cast<int>(rng() % 3); ++k)
      out[d].push_back({id++, 1 + static_cast<int>(rng() % 100)});
  return out;
}

// GPUs holding the context of `old` at shuffled positions; extras hold nothing.
std::vector<ContextInventory> random_layout(std::mt19937& rng, const ParallelConfig& old,
                                            int num_gpus, const PipelineRequests& reqs) {
  std::vector<ContextInventory> inv(num_gpus);
  std::vector<int> slots(num_gpus);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  int k = 0;
  for (const auto& pos : all_positions(old)) {
    if (k >= num_gpus) break;
    if (rng() % 5 == 0) continue;  // lost to preemption
    inv[slots[k++]] = required_context_with_cache(old, pos, kModel, reqs[pos.d]);
  }
  return inv;
}

void expect_bijection(const DeviceMapping& m) {
  EXPECT_TRUE(m.complete());
  std::set<GpuId> gpus;
  std::set<TopologyPosition> pos;
  for (const auto& [g, p] : m.assignment) {
    EXPECT_TRUE(gpus.insert(g).second);
    EXPECT_TRUE(pos.insert(p).second);
    EXPECT_TRUE(valid_position(m.config, p));
  }
}

TEST(MapDevices, SingleGpuInstancesReduceToFlatKm) {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const ParallelConfig old = random_config(rng, 12);
    const ParallelConfig next = random_config(rng, 12);
    const int n = next.gpus() + static_cast<int>(rng() % 3);
    const PipelineRequests reqs = random_requests(rng, old.D);
    const auto layout = random_layout(rng, old, n, reqs);
    std::vector<InstanceGpus> inst;
    std::vector<GpuNode> flat;
    for (int i = 0; i < n; ++i) {
      inst.push_back({i, {layout[i]}});
      flat.push_back({GpuId{i, 0}, layout[i]});
    }
    const PipelineRequests inherited = identity_inheritance(reqs, next.D);
    const DeviceMapping a = map_devices(inst, next, kModel, 1, inherited);
    const DeviceMapping b = km_device_mapping(flat, next, kModel, inherited);
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_EQ(a.total_weight, b.total_weight);
    expect_bijection(a);
  }
}

TEST(MapDevices, FusedMappingKeepsTensorGroupsInsideInstances) {
  std::mt19937 rng(22);
  const int G = 4;
  for (int trial = 0; trial < 200; ++trial) {
    const ParallelConfig old = random_config(rng, 16);
    const ParallelConfig next = random_config(rng, 16);
    const int instances = instances_needed(next, G) + static_cast<int>(rng() % 2);
    const PipelineRequests reqs = random_requests(rng, old.D);
    const auto layout = random_layout(rng, old, instances * G, reqs);
    std::vector<InstanceGpus> inst;
    std::vector<GpuNode> flat;
    for (int i = 0; i < instances; ++i) {
      InstanceGpus ig{i, {}};
      for (int k = 0; k < G; ++k) {
        ig.gpus.push_back(layout[i * G + k]);
        flat.push_back({GpuId{i, k}, layout[i * G + k]});
      }
      inst.push_back(ig);
    }
    const PipelineRequests inherited = identity_inheritance(reqs, next.D);
    for (auto rule : {FusedWeightRule::kMax, FusedWeightRule::kSum}) {
      const DeviceMapping m = map_devices(inst, next, kModel, G, inherited, rule);
      expect_bijection(m);
      const int fuse = std::min(G, next.M);
      for (const auto& [g, p] : m.assignment) {
        // Every member of p's fused group sits on the same instance.
        const int group_first = p.m / fuse * fuse;
        const auto lead = m.gpu_at({p.d, p.p, group_first});
        ASSERT_TRUE(lead.has_value());
        EXPECT_EQ(lead->instance, g.instance);
      }
      // The two-step result never beats the unconstrained optimum.
      const DeviceMapping best = km_device_mapping(flat, next, kModel, inherited);
      EXPECT_LE(m.total_weight, best.total_weight * (1 + 1e-12) + 1e-6);
    }
  }
}

TEST(MapDevices, RejectsBadInstanceShapes) {
  std::vector<InstanceGpus> inst{{0, {ContextInventory{}, ContextInventory{}}}};
  EXPECT_THROW(map_devices(inst, ParallelConfig{1, 1, 2, 1}, kModel, 4, {}), FusingError);
  std::vector<InstanceGpus> four{{0, std::vector<ContextInventory>(4)}};
  EXPECT_THROW(map_devices(four, ParallelConfig{1, 1, 3, 1}, kModel, 4, {}), FusingError);
}

TEST(MapDevices, IdenticalLayoutKeepsEveryGpuInPlace) {
  const ParallelConfig c{2, 2, 4, 2};
  std::vector<InstanceGpus> inst;
  for (int i = 0; i < 4; ++i) {
    InstanceGpus ig{i, {}};
    for (int k = 0; k < 4; ++k)
      ig.gpus.push_back(required_context(c, position_at(c, i * 4 + k), kModel));
    inst.push_back(ig);
  }
  const DeviceMapping m = map_devices(inst, c, kModel, 4, {});
  const DeviceMapping n = naive_mapping(inst, c);
  EXPECT_EQ(m.assignment, n.assignment);
  EXPECT_DOUBLE_EQ(m.total_weight, kModel.total_param_bytes() * c.D);
}

TEST(RetainCache, KeepsMostDecodedUpToCapacity) {
  const std::vector<RequestProgress> active{{1, 5}, {2, 50}, {3, 5}, {4, 20}};
  EXPECT_EQ(retain_cache(active, 2), (std::vector<RequestId>{2, 4}));
  EXPECT_EQ(retain_cache(active, 3), (std::vector<RequestId>{1, 2, 4}));
  EXPECT_EQ(retain_cache(active, 9).size(), 4u);
  EXPECT_EQ(retain_cache(active, ParallelConfig{2, 1, 1, 4}, ParallelConfig{1, 1, 1, 2}),
            (std::vector<RequestId>{2, 4}));
  EXPECT_EQ(retain_cache(active, ParallelConfig{1, 1, 1, 2}, ParallelConfig{2, 1, 1, 4}).size(),
            4u);
}

TEST(IdentityInheritance, TruncatesAndPads) {
  const PipelineRequests old{{{1, 3}}, {{2, 4}}, {{3, 5}}};
  const auto two = identity_inheritance(old, 2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[1][0].id, 2);
  const auto four = identity_inheritance(old, 4);
  EXPECT_TRUE(four[3].empty());
}

}  // namespace
}  // namespace spotsim
