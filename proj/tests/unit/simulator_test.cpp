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
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "spotsim/profile_io.hpp"
#include "spotsim/simulator.hpp"
#include "test_util.hpp"

namespace spotsim {
namespace {

using testing::data_path;

SimInputs scenario(Policy policy, double rate = 0.35) {
  SimConfig c = load_config(data_path("configs/gpt20b_bs_a035.json"));
  c.policy = policy;
  c.workload.rate = rate;
  return load_inputs(c);
}

void expect_sane(const SimInputs& in, const MetricsReport& r) {
  EXPECT_EQ(r.requests.size(), in.arrivals.size());
  int arrived = 0;
  for (const RequestRecord& q : r.requests) {
    if (q.arrival <= r.horizon) ++arrived;
    if (!q.completed()) continue;
    EXPECT_GE(q.dispatch, q.arrival);
    EXPECT_GT(q.completion, q.dispatch);
    EXPECT_GE(q.restarts, 0);
  }
  EXPECT_EQ(r.arrived, arrived);
  EXPECT_LE(r.outstanding_at_horizon, r.arrived);
  for (const UsageRecord& u : r.usage) {
    EXPECT_LE(u.start, u.end);
    EXPECT_LE(u.end, r.horizon);
  }
  for (std::size_t i = 1; i < r.reconfigurations.size(); ++i)
    EXPECT_LE(r.reconfigurations[i - 1].t, r.reconfigurations[i].t);
}

TEST(Simulate, IsolatedRequestsSeeProfiledLatency) {
  SimInputs in = scenario(Policy::kSpotServe);
  in.trace.clear();
  in.arrivals.clear();
  for (int i = 0; i < 10; ++i) in.arrivals.push_back({100.0 * i + 1.0, 512, 128});
  const MetricsReport r = simulate(in);
  ASSERT_FALSE(r.reconfigurations.empty());
  const ParallelConfig c = r.reconfigurations.front().config;
  const double expect = exec_latency(in.profile, c, 512, 128, in.profile.batch_bucket(c.P, c.M, 1));
  ASSERT_EQ(r.completed, 10);
  for (const RequestRecord& q : r.requests) EXPECT_NEAR(q.l_req(), expect, 1e-9);
  EXPECT_EQ(r.outstanding_at_horizon, 0);
}

TEST(Simulate, EveryPolicySaneOnShippedScenario) {
  for (Policy p : {Policy::kSpotServe, Policy::kRerouting, Policy::kReparallelization}) {
    const SimInputs in = scenario(p);
    const MetricsReport r = simulate(in);
    EXPECT_EQ(r.policy, to_string(p));
    expect_sane(in, r);
    EXPECT_GT(r.completed, 0);
    EXPECT_GE(r.reconfigurations.size(), 3u);
  }
}

TEST(Simulate, Deterministic) {
  for (Policy p : {Policy::kSpotServe, Policy::kRerouting, Policy::kReparallelization}) {
    const SimInputs in = scenario(p);
    std::ostringstream a, b;
    write_requests_csv(a, simulate(in));
    write_requests_csv(b, simulate(in));
    EXPECT_EQ(a.str(), b.str());
  }
}

TEST(Simulate, CostRatioFollowsInstancePrices) {
  SimInputs in = scenario(Policy::kSpotServe);
  in.config.instance_kind_override = InstanceKind::kSpot;
  const MetricsReport spot = simulate(in);
  in.config.instance_kind_override = InstanceKind::kOnDemand;
  const MetricsReport od = simulate(in);
  EXPECT_NEAR(spot.cost.total_usd / od.cost.total_usd,
              in.profile.prices.spot_price / in.profile.prices.ondemand_price, 1e-9);
}

TEST(Simulate, UsageCoversHorizonForSurvivors) {
  SimInputs in = scenario(Policy::kSpotServe);
  in.trace.clear();
  const MetricsReport r = simulate(in);
  // No availability changes: the initial fleet runs for the whole horizon.
  double seconds = 0.0;
  for (const UsageRecord& u : r.usage) seconds += u.end - u.start;
  EXPECT_DOUBLE_EQ(seconds, in.config.initial_instances * in.config.duration);
}

TEST(Simulate, PreemptedInstancesStopBillingAtDeadline) {
  const SimInputs in = scenario(Policy::kSpotServe);
  const MetricsReport r = simulate(in);
  for (const TraceEvent& e : in.trace) {
    if (e.kind != TraceKind::kPreempt) continue;
    for (const UsageRecord& u : r.usage)
      if (u.instance == e.id) EXPECT_LE(u.end, e.t + e.grace + 1e-9) << e.id;
  }
}

TEST(Simulate, HeavierLoadNeverServesFaster) {
  for (Policy p : {Policy::kSpotServe, Policy::kRerouting}) {
    SimInputs light = scenario(p);
    light.trace.clear();
    SimInputs heavy = light;
    // Same arrivals, doubled: every extra request competes for the same pipelines.
    std::vector<Arrival> doubled;
    for (const Arrival& a : light.arrivals) {
      doubled.push_back(a);
      doubled.push_back(a);
    }
    heavy.arrivals = doubled;
    EXPECT_GE(simulate(heavy).p99, simulate(light).p99) << to_string(p);
  }
}

TEST(Simulate, ArrivalFileWorkload) {
  const SimConfig c = load_config(data_path("configs/gpt20b_bs_load_shift.json"));
  ASSERT_EQ(c.workload.type, WorkloadConfig::Type::kArrivalFile);
  const SimInputs in = load_inputs(c);
  EXPECT_EQ(in.arrivals.size(), 336u);
  const MetricsReport r = simulate(in);
  expect_sane(in, r);
  EXPECT_GT(r.completed, 0);
}

}  // namespace
}  // namespace spotsim
