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

#include "spotsim/controller.hpp"
#include "spotsim/errors.hpp"
#include "spotsim/profile_io.hpp"
#include "test_util.hpp"

namespace spotsim {
namespace {

using testing::data_path;
using testing::toy_profile;

TEST(EstimateArrivalRate, CountsHalfOpenWindow) {
  const std::vector<double> t{1.0, 2.0, 10.0, 29.0, 31.0, 40.0};
  EXPECT_DOUBLE_EQ(estimate_arrival_rate(t, 40.0, 30.0).rate, 3.0 / 30.0);
  EXPECT_DOUBLE_EQ(estimate_arrival_rate(t, 31.0, 30.0).rate, 4.0 / 30.0);
  EXPECT_DOUBLE_EQ(estimate_arrival_rate(t, 0.5, 30.0).rate, 0.0);
}

TEST(EnumerateCandidates, RespectsLimits) {
  const PerfProfile p = toy_profile(8, 4);
  CandidateLimits lim;
  lim.max_gpus = 16;
  lim.batch_sizes = {2};
  lim.min_stage_gpus = 4;
  const auto cands = enumerate_candidates(p, lim);
  ASSERT_FALSE(cands.empty());
  for (const auto& c : cands) {
    EXPECT_LE(c.gpus(), 16);
    EXPECT_EQ(c.B, 2);
    EXPECT_GE(c.P * c.M, 4);
  }
  EXPECT_TRUE(std::is_sorted(cands.begin(), cands.end()));
  lim.fixed_shape = std::make_pair(2, 2);
  for (const auto& c : enumerate_candidates(p, lim)) {
    EXPECT_EQ(c.P, 2);
    EXPECT_EQ(c.M, 2);
  }
}

// Independent restatement of the selection rule.
std::optional<ParallelConfig> oracle(int n, double alpha, const PerfProfile& p,
                                     const std::vector<ParallelConfig>& cands,
                                     const OptimizerOptions& o) {
  auto inst = [&](const ParallelConfig& c) { return instances_needed(c, o.gpus_per_instance); };
  auto lat = [&](const ParallelConfig& c) { return exec_latency(p, c, o.s_in, o.s_out); };
  auto key = [&](const ParallelConfig& c) { return std::make_tuple(inst(c), c.D, c.P, c.M, c.B); };
  std::vector<ParallelConfig> feas;
  for (const auto& c : cands)
    if (inst(c) <= o.instance_cap && throughput(p, c, o.s_in, o.s_out) >= alpha) feas.push_back(c);
  if (!feas.empty()) {
    double best = 1e300;
    for (const auto& c : feas) best = std::min(best, lat(c));
    std::optional<ParallelConfig> pick;
    for (const auto& c : feas)
      if (lat(c) <= best * (1 + o.tolerance) && (!pick || key(c) < key(*pick))) pick = c;
    return pick;
  }
  std::optional<ParallelConfig> pick;
  double best_phi = -1.0;
  for (const auto& c : cands) {
    if (inst(c) > n) continue;
    const double phi = throughput(p, c, o.s_in, o.s_out);
    if (phi > best_phi || (phi == best_phi && key(c) < key(*pick))) {
      best_phi = phi;
      pick = c;
    }
  }
  return pick;
}

TEST(OptimizeConfig, AgreesWithBruteForceOracle) {
  const PerfProfile p = toy_profile(8, 4);
  CandidateLimits lim;
  lim.max_gpus = 48;
  const auto cands = enumerate_candidates(p, lim);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> alpha(0.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = static_cast<int>(rng() % 13);
    OptimizerOptions o;
    o.gpus_per_instance = 4;
    o.instance_cap = n + static_cast<int>(rng() % 3);
    const double a = alpha(rng);
    EXPECT_EQ(optimize_config(n, a, p, cands, o), oracle(n, a, p, cands, o))
        << "n=" << n << " alpha=" << a;
  }
}

TEST(OptimizeConfig, EmptyCandidatesThrowAndNothingFitsIsNullopt) {
  const PerfProfile p = toy_profile(8, 4);
  OptimizerOptions o;
  o.gpus_per_instance = 4;
  EXPECT_THROW(optimize_config(4, 0.1, p, {}, o), ConfigError);
  const std::vector<ParallelConfig> big{{4, 4, 4, 1}};
  EXPECT_EQ(optimize_config(1, 0.1, p, big, o), std::nullopt);
}

struct CaseStep {
  int n;
  const char* shape;
};

// GPT-20B fixture at alpha = 0.35 over the shipped availability path.
TEST(OptimizeConfig, Gpt20bFixtureSequence) {
  const PerfProfile p = load_profile(data_path("profiles/gpt20b.json"));
  CandidateLimits lim;
  lim.max_gpus = 48;
  const auto cands = enumerate_candidates(p, lim);
  for (const CaseStep& s : {CaseStep{10, "(2,2,8)"}, CaseStep{8, "(2,2,8)"},
                            CaseStep{7, "(2,3,4)"}, CaseStep{8, "(2,2,8)"}}) {
    OptimizerOptions o;
    o.gpus_per_instance = 4;
    o.instance_cap = s.n;
    const auto c = optimize_config(s.n, 0.35, p, cands, o);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(c->shape(), s.shape) << "N=" << s.n;
  }
}

TEST(PlanInstances, DeltaCountsPool) {
  const ParallelConfig c{2, 2, 8, 4};
  auto d = plan_instances(c, 7, 2, 4);
  EXPECT_EQ(d.delta, 3);
  ASSERT_TRUE(d.alloc.has_value());
  EXPECT_EQ(d.alloc->count, 3);
  EXPECT_FALSE(d.free.has_value());
  d = plan_instances(c, 12, 2, 4);
  EXPECT_EQ(d.delta, -2);
  ASSERT_TRUE(d.free.has_value());
  EXPECT_EQ(d.free->count, 2);
  EXPECT_EQ(plan_instances(c, 10, 2, 4).delta, 0);
}

TEST(ChooseInstancesToFree, OnDemandFirstInInputOrder) {
  const std::vector<ReleaseCandidate> idle{{"s1", InstanceKind::kSpot},
                                           {"o1", InstanceKind::kOnDemand},
                                           {"s2", InstanceKind::kSpot},
                                           {"o2", InstanceKind::kOnDemand}};
  EXPECT_EQ(choose_instances_to_free(idle, 3), (std::vector<std::string>{"o1", "o2", "s1"}));
  EXPECT_EQ(choose_instances_to_free(idle, 9).size(), 4u);
}

TEST(ShouldReconfigure, MembershipChangeForcesReconfiguration) {
  const ParallelConfig c{2, 2, 8, 4};
  EXPECT_TRUE(should_reconfigure(std::nullopt, c, false));
  EXPECT_FALSE(should_reconfigure(c, c, false));
  EXPECT_TRUE(should_reconfigure(c, c, true));
  EXPECT_TRUE(should_reconfigure(c, ParallelConfig{2, 3, 4, 2}, false));
}

}  // namespace
}  // namespace spotsim
