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
#include <random>

#include <gtest/gtest.h>

#include "spotsim/domain.hpp"
#include "spotsim/errors.hpp"
#include "spotsim/fraction.hpp"

namespace spotsim {
namespace {

TEST(Fraction, NormalizesSignAndGcd) {
  Fraction f(6, -8);
  EXPECT_EQ(f.num(), -3);
  EXPECT_EQ(f.den(), 4);
  EXPECT_EQ(Fraction(1, 3) + Fraction(1, 6), Fraction(1, 2));
  EXPECT_EQ(Fraction(1, 2) - Fraction(3, 4), Fraction(-1, 4));
  EXPECT_LT(Fraction(1, 3), Fraction(1, 2));
}

TEST(Fraction, ZeroDenominatorThrows) { EXPECT_THROW(Fraction(1, 0), DomainError); }

TEST(IntervalSet, AddMergesAndSubtractSplits) {
  IntervalSet s;
  s.add({Fraction(0), Fraction(1, 4)});
  s.add({Fraction(1, 4), Fraction(1, 2)});
  ASSERT_EQ(s.parts().size(), 1u);
  EXPECT_EQ(s.measure(), Fraction(1, 2));
  s.subtract({Fraction(1, 8), Fraction(3, 8)});
  EXPECT_EQ(s.parts().size(), 2u);
  EXPECT_EQ(s.measure(), Fraction(1, 4));
  EXPECT_FALSE(s.covers({Fraction(0), Fraction(1, 4)}));
  EXPECT_TRUE(s.covers({Fraction(3, 8), Fraction(1, 2)}));
}

// Measure on random unions of 1/k grid cells equals the cell count.
TEST(IntervalSet, MeasureMatchesGridOracle) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 12);
    std::vector<bool> cell(k, false);
    IntervalSet s;
    for (int op = 0; op < 10; ++op) {
      const int a = static_cast<int>(rng() % k);
      const int b = a + 1 + static_cast<int>(rng() % (k - a));
      const bool add = rng() % 2 == 0;
      Interval iv{Fraction(a, k), Fraction(b, k)};
      if (add) s.add(iv); else s.subtract(iv);
      for (int c = a; c < b; ++c) cell[c] = add;
    }
    int n = 0;
    for (bool c : cell) n += c;
    EXPECT_EQ(s.measure(), Fraction(n, k));
  }
}

TEST(ParallelConfig, InstancesNeededRoundsUp) {
  EXPECT_EQ(instances_needed(ParallelConfig{2, 2, 8, 1}, 4), 8);
  EXPECT_EQ(instances_needed(ParallelConfig{2, 3, 4, 1}, 4), 6);
  EXPECT_EQ(instances_needed(ParallelConfig{1, 3, 1, 1}, 4), 1);
  EXPECT_THROW(instances_needed(ParallelConfig{}, 0), DomainError);
  EXPECT_EQ(ParallelConfig({2, 3, 4, 2}).shape(), "(2,3,4)");
  EXPECT_EQ(ParallelConfig({2, 3, 4, 2}).to_string(), "(2,3,4,2)");
}

TEST(ParallelConfig, LinearIndexRoundTrips) {
  const ParallelConfig c{3, 2, 4, 1};
  for (int i = 0; i < c.gpus(); ++i) EXPECT_EQ(linear_index(c, position_at(c, i)), i);
  EXPECT_THROW(linear_index(c, TopologyPosition{3, 0, 0}), DomainError);
  EXPECT_THROW(position_at(c, c.gpus()), DomainError);
  EXPECT_EQ(all_positions(c).size(), static_cast<std::size_t>(c.gpus()));
}

TEST(StageLayers, PartitionIsContiguousAndBalanced) {
  for (int L = 1; L <= 30; ++L)
    for (int P = 1; P <= L && P <= 8; ++P) {
      int next = 0;
      for (int p = 0; p < P; ++p) {
        LayerBlock b = stage_layers(L, P, p);
        EXPECT_EQ(b.first, next);
        EXPECT_TRUE(b.size() == L / P || b.size() == L / P + 1);
        for (int l = b.first; l < b.last; ++l) EXPECT_EQ(stage_of_layer(L, P, l), p);
        next = b.last;
      }
      EXPECT_EQ(next, L);
    }
}

TEST(RequiredContext, ShardsCoverEveryLayerOnce) {
  ModelSpec model{"m", 10, 100.0, 1.0};
  const ParallelConfig c{1, 3, 4, 1};
  std::vector<IntervalSet> held(model.num_layers);
  double bytes = 0.0;
  for (const auto& pos : all_positions(c)) {
    ContextInventory inv = required_context(c, pos, model);
    bytes += inventory_bytes(inv, model);
    for (const auto& s : inv.model_shards) {
      EXPECT_TRUE(held[s.layer].intersected(s.range).empty());
      held[s.layer].add(s.range);
    }
  }
  for (const auto& h : held) EXPECT_EQ(h.measure(), Fraction(1));
  EXPECT_DOUBLE_EQ(bytes, model.total_param_bytes());
  EXPECT_THROW(required_context(ParallelConfig{1, 11, 1, 1}, {0, 0, 0}, model), DomainError);
}

TEST(RequiredContext, CacheShardsFollowModelShards) {
  ModelSpec model{"m", 4, 100.0, 2.0};
  const ParallelConfig c{1, 2, 2, 1};
  ContextInventory inv =
      required_context_with_cache(c, {0, 1, 1}, model, {{7, 10}, {8, 0}});
  ASSERT_EQ(inv.cache_shards.size(), 2u);
  for (const auto& s : inv.cache_shards) {
    EXPECT_EQ(s.request, 7);
    EXPECT_EQ(s.range, shard_interval(1, 2));
  }
  // 2 layers * 10 tokens * 2 bytes * 1/2 shard.
  double cache = 0.0;
  for (const auto& s : inv.cache_shards) cache += cache_shard_bytes(s, model);
  EXPECT_DOUBLE_EQ(cache, 20.0);
}

TEST(OverlapBytes, CountsSharedFractions) {
  ModelSpec model{"m", 4, 120.0, 1.0};
  ContextInventory a = required_context(ParallelConfig{1, 1, 2, 1}, {0, 0, 0}, model);
  ContextInventory b = required_context(ParallelConfig{1, 2, 3, 1}, {0, 0, 1}, model);
  // a holds [0,1/2) of layers 0..3; b holds [1/3,2/3) of layers 0..1.
  EXPECT_DOUBLE_EQ(overlap_bytes(a, b, model), 2 * 120.0 / 6.0);
  EXPECT_DOUBLE_EQ(overlap_bytes(a, a, model), inventory_bytes(a, model));
}

TEST(ClusterState, AvailableExcludesGraceAndReleased) {
  ClusterState cs;
  for (auto st : {InstanceStatus::kActive, InstanceStatus::kAllocating,
                  InstanceStatus::kGracePreempting, InstanceStatus::kReleased}) {
    InstanceState s;
    s.status = st;
    if (st == InstanceStatus::kGracePreempting) s.deadline = 30.0;
    cs.instances.push_back(s);
  }
  EXPECT_EQ(cs.available_count(), 2);
  EXPECT_TRUE(cs.consistent());
  cs.instances[0].deadline = 1.0;
  EXPECT_FALSE(cs.consistent());
}

TEST(InstanceKind, ParsesAliases) {
  EXPECT_EQ(instance_kind_from_string("spot"), InstanceKind::kSpot);
  EXPECT_EQ(instance_kind_from_string("on-demand"), InstanceKind::kOnDemand);
  EXPECT_THROW(instance_kind_from_string("reserved"), ConfigError);
}

}  // namespace
}  // namespace spotsim
