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
#ifndef SPOTSIM_COST_MODEL_HPP_
#define SPOTSIM_COST_MODEL_HPP_

#include <functional>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "spotsim/domain.hpp"
#include "spotsim/migration_plan.hpp"

namespace spotsim {

// Profiled cost of one (P, M, B) shape. t_init is measured at the profile's
// reference input length and scales linearly with S_in.
struct ExecEntry {
  double t_init = 0.0;
  double t_dec = 0.0;
};

struct PriceSheet {
  double spot_price = 1.9;      // USD / hour / instance
  double ondemand_price = 3.9;  // USD / hour / instance

  double price(InstanceKind k) const {
    return k == InstanceKind::kSpot ? spot_price : ondemand_price;
  }
};

struct ExecKey {
  int P = 1;
  int M = 1;
  int B = 1;
  friend auto operator<=>(const ExecKey&, const ExecKey&) = default;
};

struct PerfProfile {
  ModelSpec model;
  std::map<ExecKey, ExecEntry> exec;
  int init_reference_s_in = 512;
  double pipeline_efficiency = 1.0;  // eta
  double bandwidth = 1e9;            // bytes/s per GPU port
  double transfer_latency = 0.0;     // epsilon, seconds per transfer round
  double restart_load_time = 0.0;    // fixed engine relaunch overhead, seconds
  double local_restart_ratio = 1.45;
  double remote_restart_ratio = 9.54;
  bool allow_nearest = false;
  int gpus_per_instance = 1;
  // Smallest P*M that fits without the memory-aware migration order (0: none).
  int min_gpus_without_memopt = 0;
  PriceSheet prices;

  bool has(int P, int M, int B) const { return exec.count(ExecKey{P, M, B}) > 0; }
  const ExecEntry& entry(int P, int M, int B) const;
  // Smallest profiled batch >= b for this (P, M); throws if none.
  int batch_bucket(int P, int M, int b) const;
  std::vector<ExecKey> keys() const;
  void validate() const;
};

double init_time(const PerfProfile& profile, int P, int M, int B, int s_in);
double decode_step_time(const PerfProfile& profile, int P, int M, int B);

// t_init(S_in) + S_out * t_dec for the (P, M, B) entry.
double exec_latency(const PerfProfile& profile, const ParallelConfig& config, int s_in,
                    int s_out, int B);
inline double exec_latency(const PerfProfile& profile, const ParallelConfig& config, int s_in,
                           int s_out) {
  return exec_latency(profile, config, s_in, s_out, config.B);
}

// t_exe(S_in) + sum_{i=1..S_out} t_exe(S_in + i) for a per-length cost t_exe.
double exec_latency_exact(const std::function<double(int)>& t_exe, int s_in, int s_out);

// phi(C) = D * B / (l_exe / (P * eta)) at the nominal request shape.
double throughput(const PerfProfile& profile, const ParallelConfig& config, int s_in, int s_out);

struct MigrationCost {
  double total = 0.0;              // all actions back to back
  double progressive_stall = 0.0;  // service stall with per-stage start
  double serial_sum = 0.0;         // every transfer serialized
  std::vector<double> stage_ready;
};

// Wall time of one action: each GPU port moves at `bandwidth` full duplex, so
// disjoint pairs overlap and a shared endpoint serializes.
double action_time(const MigrationAction& action, const PerfProfile& profile);

// `stage_step_time` is how long one stage takes on the first resumed
// iteration; stage p is needed p * stage_step_time after stage 0 starts.
MigrationCost migration_cost(const MigrationPlan& plan, const PerfProfile& profile,
                             double stage_step_time = 0.0);

enum class RestartSource { kLocalDisk, kRemoteStorage };

// Restart expressed against the equivalent context-migration time.
double restart_cost(const PerfProfile& profile, RestartSource source, double migration_baseline);

struct UsageRecord {
  std::string instance;
  InstanceKind kind = InstanceKind::kSpot;
  double start = 0.0;  // seconds
  double end = 0.0;
};

struct CostSummary {
  double total_usd = 0.0;
  double per_token_usd = 0.0;
};

CostSummary monetary_cost(std::span<const UsageRecord> usage, const PriceSheet& prices,
                          double tokens_served);

}  // namespace spotsim

#endif  // SPOTSIM_COST_MODEL_HPP_
