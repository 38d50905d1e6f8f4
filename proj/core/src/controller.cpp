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
#include "spotsim/controller.hpp"

#include <algorithm>
#include <tuple>

#include "spotsim/errors.hpp"

namespace spotsim {

WorkloadEstimate estimate_arrival_rate(std::span<const double> arrival_times, double now,
                                       double window) {
  WorkloadEstimate est;
  est.window = window;
  if (window <= 0) return est;
  auto lo = std::upper_bound(arrival_times.begin(), arrival_times.end(), now - window);
  auto hi = std::upper_bound(arrival_times.begin(), arrival_times.end(), now);
  est.rate = hi > lo ? static_cast<double>(hi - lo) / window : 0.0;
  return est;
}

std::vector<ParallelConfig> enumerate_candidates(const PerfProfile& profile,
                                                 const CandidateLimits& limits) {
  std::vector<ParallelConfig> out;
  for (const ExecKey& k : profile.keys()) {
    if (k.P > profile.model.num_layers) continue;
    if (limits.shard_limit > 0 && limits.shard_limit % k.M != 0) continue;
    if (k.P * k.M < limits.min_stage_gpus) continue;
    if (limits.fixed_shape && (k.P != limits.fixed_shape->first || k.M != limits.fixed_shape->second))
      continue;
    if (std::find(limits.batch_sizes.begin(), limits.batch_sizes.end(), k.B) ==
        limits.batch_sizes.end())
      continue;
    for (int d = 1; d * k.P * k.M <= limits.max_gpus; ++d) out.push_back({d, k.P, k.M, k.B});
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct Scored {
  ParallelConfig config;
  int instances;
  double latency;
  double throughput;
};

auto rank_key(const Scored& s) {
  return std::make_tuple(s.instances, s.config.D, s.config.P, s.config.M, s.config.B);
}

}  // namespace

std::optional<ParallelConfig> optimize_config(int n_available, double alpha,
                                              const PerfProfile& profile,
                                              std::span<const ParallelConfig> candidates,
                                              const OptimizerOptions& options) {
  if (candidates.empty()) throw ConfigError("optimize_config: empty candidate set");
  std::vector<Scored> scored;
  scored.reserve(candidates.size());
  for (const ParallelConfig& c : candidates) {
    Scored s{c, instances_needed(c, options.gpus_per_instance),
             exec_latency(profile, c, options.s_in, options.s_out, c.B), 0.0};
    s.throughput = throughput(profile, c, options.s_in, options.s_out);
    scored.push_back(s);
  }

  // Throughput-feasible configs the cloud can host.
  double best_latency = -1.0;
  for (const Scored& s : scored) {
    if (s.instances > options.instance_cap || s.throughput < alpha) continue;
    if (best_latency < 0 || s.latency < best_latency) best_latency = s.latency;
  }
  if (best_latency >= 0) {
    const Scored* pick = nullptr;
    for (const Scored& s : scored) {
      if (s.instances > options.instance_cap || s.throughput < alpha) continue;
      if (s.latency > best_latency * (1.0 + options.tolerance)) continue;
      if (!pick || rank_key(s) < rank_key(*pick)) pick = &s;
    }
    return pick->config;
  }

  // Nothing covers alpha: maximize throughput with what is available now.
  const Scored* pick = nullptr;
  for (const Scored& s : scored) {
    if (s.instances > n_available) continue;
    if (!pick || s.throughput > pick->throughput ||
        (s.throughput == pick->throughput && rank_key(s) < rank_key(*pick)))
      pick = &s;
  }
  if (!pick) return std::nullopt;
  return pick->config;
}

ControllerDecision plan_instances(const ParallelConfig& next, int n_available, int pool_size,
                                  int gpus_per_instance) {
  ControllerDecision d;
  d.next = next;
  d.delta = instances_needed(next, gpus_per_instance) + std::max(pool_size, 0) - n_available;
  if (d.delta > 0) d.alloc = AllocDirective{d.delta};
  if (d.delta < 0) d.free = FreeDirective{-d.delta, true};
  return d;
}

std::vector<std::string> choose_instances_to_free(std::span<const ReleaseCandidate> idle,
                                                  int count) {
  std::vector<std::string> out;
  for (InstanceKind kind : {InstanceKind::kOnDemand, InstanceKind::kSpot}) {
    for (const ReleaseCandidate& c : idle) {
      if (static_cast<int>(out.size()) >= count) return out;
      if (c.kind == kind) out.push_back(c.id);
    }
  }
  return out;
}

bool should_reconfigure(const std::optional<ParallelConfig>& current, const ParallelConfig& next,
                        bool membership_changed) {
  return !current || *current != next || membership_changed;
}

}  // namespace spotsim
