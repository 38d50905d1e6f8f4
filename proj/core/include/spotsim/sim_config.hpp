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
#ifndef SPOTSIM_SIM_CONFIG_HPP_
#define SPOTSIM_SIM_CONFIG_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spotsim/device_mapper.hpp"
#include "spotsim/domain.hpp"
#include "spotsim/trace.hpp"

namespace spotsim {

enum class Policy { kSpotServe, kRerouting, kReparallelization };
std::string to_string(Policy p);
Policy policy_from_string(const std::string& s);

// Where the controller's alpha comes from: the configured mean rate, or the
// arrivals seen in the trailing window.
enum class AlphaSource { kNominal, kWindow };

struct FeatureFlags {
  bool controller = true;
  bool planner = true;
  bool arranger = true;
  bool mapper = true;
};

struct WorkloadConfig {
  enum class Type { kFixedRate, kArrivalFile };
  Type type = Type::kFixedRate;
  double rate = 0.35;
  double cv = 6.0;
  std::uint64_t seed = 1;
  std::string arrival_path;
};

struct SimConfig {
  std::string profile_path;
  std::string trace_path;
  WorkloadConfig workload;
  Policy policy = Policy::kSpotServe;
  double duration = 1200.0;
  int pool_size = 2;  // spare instances kept above what the config needs
  double u_max = std::numeric_limits<double>::infinity();  // bytes per instance
  int max_instances = 16;
  std::vector<int> batch_sizes{1, 2, 4, 8};
  int s_in = 512;
  int s_out = 128;
  AlphaSource alpha_source = AlphaSource::kNominal;
  double window = 30.0;
  TraceDefaults grace;
  bool ondemand_mixing = false;
  std::optional<InstanceKind> instance_kind_override;
  FeatureFlags features;
  FusedWeightRule fused_weight = FusedWeightRule::kMax;
  int initial_instances = 0;  // warm at t = 0, ids i-0 .. i-(n-1)
  // Shape the rerouting baseline keeps; defaults to the first config chosen.
  std::optional<std::pair<int, int>> reroute_shape;
  // Simulated time allowed after the horizon to drain in-flight work.
  double drain_limit = 3600.0;
};

// Relative paths resolve against `base_dir`. Throws ConfigError.
SimConfig config_from_json(const nlohmann::json& j, const std::string& base_dir);
nlohmann::json config_to_json(const SimConfig& c);
SimConfig load_config(const std::string& path);

}  // namespace spotsim

#endif  // SPOTSIM_SIM_CONFIG_HPP_
