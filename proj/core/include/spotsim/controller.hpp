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
#ifndef SPOTSIM_CONTROLLER_HPP_
#define SPOTSIM_CONTROLLER_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spotsim/cost_model.hpp"
#include "spotsim/domain.hpp"

namespace spotsim {

struct WorkloadEstimate {
  double rate = 0.0;  // requests / second
  double window = 30.0;
};

// Arrivals in (now - window, now] divided by window. `arrival_times` sorted.
WorkloadEstimate estimate_arrival_rate(std::span<const double> arrival_times, double now,
                                       double window = 30.0);

struct CandidateLimits {
  int max_gpus = 0;
  std::vector<int> batch_sizes{1, 2, 4, 8};
  int shard_limit = 8;  // M must divide this
  int min_stage_gpus = 0;  // lower bound on P*M (memory constraint)
  // Restrict to one (P, M) shape; D and B stay free.
  std::optional<std::pair<int, int>> fixed_shape;
};

// Every (D, P, M, B) the profile can cost that fits within max_gpus, in
// lexicographic order.
std::vector<ParallelConfig> enumerate_candidates(const PerfProfile& profile,
                                                 const CandidateLimits& limits);

struct OptimizerOptions {
  int gpus_per_instance = 1;
  int instance_cap = 0;     // instances the cloud can provide right now
  double tolerance = 0.01;  // "similar" latency, relative
  int s_in = 512;
  int s_out = 128;
};

// Adaptive configuration optimizer. Among candidates within the cloud cap
// whose throughput covers alpha, pick the lowest latency (ties within
// tolerance go to fewer instances, then lexicographic order). If none covers
// alpha, pick the highest throughput that fits N_t. nullopt if nothing fits.
// Throws ConfigError on an empty candidate set.
std::optional<ParallelConfig> optimize_config(int n_available, double alpha,
                                              const PerfProfile& profile,
                                              std::span<const ParallelConfig> candidates,
                                              const OptimizerOptions& options);

struct AllocDirective {
  int count = 0;  // on-demand and spot requested together
};

struct FreeDirective {
  int count = 0;
  bool ondemand_first = true;
};

struct ControllerDecision {
  ParallelConfig next;
  int delta = 0;
  std::optional<AllocDirective> alloc;
  std::optional<FreeDirective> free;
};

// delta = instances(next) + pool_size - N_t.
ControllerDecision plan_instances(const ParallelConfig& next, int n_available, int pool_size,
                                  int gpus_per_instance);

struct ReleaseCandidate {
  std::string id;
  InstanceKind kind = InstanceKind::kSpot;
};

// Picks `count` idle instances to release, on-demand before spot, keeping the
// input order within a kind.
std::vector<std::string> choose_instances_to_free(std::span<const ReleaseCandidate> idle,
                                                  int count);

// Reconfiguration also runs for an unchanged config when serving membership changed.
bool should_reconfigure(const std::optional<ParallelConfig>& current, const ParallelConfig& next,
                        bool membership_changed);

}  // namespace spotsim

#endif  // SPOTSIM_CONTROLLER_HPP_
