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
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "spotsim/errors.hpp"
#include "spotsim/sim_config.hpp"
#include "test_util.hpp"

namespace spotsim {
namespace {

nlohmann::json minimal() {
  return {{"profile", "p.json"},
          {"trace", "t.jsonl"},
          {"workload", {{"type", "fixed_rate"}, {"rate", 0.35}, {"cv", 6.0}, {"seed", 3}}}};
}

TEST(ConfigFromJson, DefaultsAndRelativePaths) {
  const SimConfig c = config_from_json(minimal(), "/base/dir");
  EXPECT_EQ(c.profile_path, "/base/dir/p.json");
  EXPECT_EQ(c.trace_path, "/base/dir/t.jsonl");
  EXPECT_EQ(c.policy, Policy::kSpotServe);
  EXPECT_EQ(c.alpha_source, AlphaSource::kNominal);
  EXPECT_DOUBLE_EQ(c.duration, 1200.0);
  EXPECT_EQ(c.workload.seed, 3u);
  EXPECT_EQ(c.batch_sizes, (std::vector<int>{1, 2, 4, 8}));
  EXPECT_EQ(c.fused_weight, FusedWeightRule::kMax);
}

TEST(ConfigFromJson, ArrivalFileDefaultsToWindowAlpha) {
  nlohmann::json j = minimal();
  j["workload"] = {{"type", "arrival_file"}, {"path", "/abs/arrivals.jsonl"}};
  const SimConfig c = config_from_json(j, "/base");
  EXPECT_EQ(c.workload.arrival_path, "/abs/arrivals.jsonl");
  EXPECT_EQ(c.alpha_source, AlphaSource::kWindow);
  j["alpha_source"] = "nominal";
  EXPECT_THROW(config_from_json(j, "/base"), ConfigError);
}

TEST(ConfigFromJson, RejectsInvalidInputs) {
  auto with = [](const char* key, nlohmann::json v) {
    nlohmann::json j = minimal();
    j[key] = std::move(v);
    return j;
  };
  for (const nlohmann::json& bad :
       {with("policy", "roundrobin"), with("duration", -5), with("pool_size", -1),
        with("fused_weight", "min"), with("reroute_shape", std::vector<int>{2}),
        with("alpha_source", "oracle"), with("s_out", 0), with("window", 0),
        with("instance_kind_override", "reserved")}) {
    EXPECT_THROW(config_from_json(bad, "/"), ConfigError) << bad.dump();
  }
  nlohmann::json j = minimal();
  j.erase("profile");
  EXPECT_THROW(config_from_json(j, "/"), ConfigError);
  j = minimal();
  j["workload"]["path"] = "x";
  EXPECT_THROW(config_from_json(j, "/"), ConfigError);
  j = minimal();
  j["workload"]["rate"] = 0;
  EXPECT_THROW(config_from_json(j, "/"), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::array(), "/"), ConfigError);
}

TEST(ConfigJson, RoundTripPreservesFields) {
  nlohmann::json j = minimal();
  j["policy"] = "rerouting";
  j["pool_size"] = 3;
  j["features"] = {{"planner", false}};
  j["reroute_shape"] = {2, 8};
  j["instance_kind_override"] = "ondemand";
  j["u_max"] = 1e9;
  const SimConfig a = config_from_json(j, "/base");
  const SimConfig b = config_from_json(config_to_json(a), "/elsewhere");
  EXPECT_EQ(b.profile_path, a.profile_path);
  EXPECT_EQ(b.policy, Policy::kRerouting);
  EXPECT_EQ(b.pool_size, 3);
  EXPECT_FALSE(b.features.planner);
  EXPECT_TRUE(b.features.controller);
  EXPECT_EQ(b.reroute_shape, std::make_optional(std::make_pair(2, 8)));
  EXPECT_EQ(b.instance_kind_override, std::make_optional(InstanceKind::kOnDemand));
  EXPECT_DOUBLE_EQ(b.u_max, 1e9);
  EXPECT_EQ(config_to_json(b), config_to_json(a));
}

TEST(Policy, NamesRoundTrip) {
  for (Policy p : {Policy::kSpotServe, Policy::kRerouting, Policy::kReparallelization})
    EXPECT_EQ(policy_from_string(to_string(p)), p);
  EXPECT_THROW(policy_from_string("nope"), ConfigError);
}

TEST(LoadConfig, ShippedScenarioConfigs) {
  for (const char* f : {"configs/gpt20b_bs_a025.json", "configs/gpt20b_bs_a035.json",
                        "configs/gpt20b_bs_a055.json"}) {
    const SimConfig c = load_config(testing::data_path(f));
    EXPECT_EQ(c.initial_instances, 10) << f;
    EXPECT_EQ(c.workload.type, WorkloadConfig::Type::kFixedRate);
  }
  EXPECT_THROW(load_config("/nonexistent.json"), ConfigError);
}

}  // namespace
}  // namespace spotsim
