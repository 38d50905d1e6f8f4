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
#ifndef SPOTSIM_ARRANGER_HPP_
#define SPOTSIM_ARRANGER_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spotsim/cost_model.hpp"
#include "spotsim/device_mapper.hpp"
#include "spotsim/domain.hpp"

namespace spotsim {

enum class GraceKind { kPreemption, kAcquisition };
enum class AfterAction { kMigrateWithCache, kRerouteWithoutCache, kJoinAndMigrate };

std::string to_string(AfterAction a);

// Latency of running S more decode iterations from the batch's current
// position. Must be nondecreasing in S with latency(0) == 0.
using DecodeLatency = std::function<double(int)>;

struct GraceContext {
  GraceKind kind = GraceKind::kPreemption;
  double remaining = 0.0;  // T- for a preemption, T+ for an acquisition
  double t_mig = 0.0;
  int s_remaining = 0;  // decode iterations the batch still has to run
  DecodeLatency latency;
};

struct Arrangement {
  int S_t = 0;
  AfterAction action = AfterAction::kMigrateWithCache;
};

// l(S) = init_remaining + S * t_dec for S > 0, and 0 for S = 0.
DecodeLatency linear_latency(double init_remaining, double t_dec);

// Latency for a batch of `config` that has produced `tokens_done` tokens; the
// initial phase is still owed when tokens_done == 0.
DecodeLatency profile_latency(const PerfProfile& profile, const ParallelConfig& config, int s_in,
                              int tokens_done);

// Largest S with l(S) < T- - T_mig. When the whole batch fits, it finishes in
// place. Otherwise migrating its cache must beat the migration itself
// (T_mig < l(S_t)); if it does not, the batch is rerouted with S_t = 0.
Arrangement arrange_preemption(const GraceContext& ctx);

// Smallest S with l(S) >= T+, else the whole remaining batch.
Arrangement arrange_acquisition(const GraceContext& ctx);

// A migration window the simulator wants to run.
struct PendingMigration {
  GraceKind kind = GraceKind::kPreemption;
  double start = 0.0;
  double duration = 0.0;
  std::vector<int> instances;  // every instance sending or receiving
};

struct ScheduledMigration {
  double start = 0.0;
  double end = 0.0;
  bool delayed = false;
};

// Preemption-triggered migrations are placed first in start order; each
// acquisition join is pushed past every placed window sharing an instance.
// Output is index-aligned with `pending`.
std::vector<ScheduledMigration> resolve_conflicts(std::span<const PendingMigration> pending);

enum class RecoveryKind { kNone, kMigrateFromReplica, kRestartFromStorage };

struct RecoveryAction {
  RecoveryKind kind = RecoveryKind::kNone;
  RestartSource source = RestartSource::kRemoteStorage;
  double cost = 0.0;  // seconds; only for a storage restart
  std::vector<RequestId> dropped_cache;
};

struct EarlyLoss {
  int lost_instance = 0;
  bool migration_completed = false;
  bool local_disk_available = false;
  double migration_baseline = 0.0;  // seconds, equivalent context migration
};

// An instance died before its arranged migration. Its cache is gone; if
// some layer slice is now held nowhere, the model restarts from storage.
RecoveryAction handle_early_loss(const EarlyLoss& loss, std::span<const GpuNode> layout,
                                 const PerfProfile& profile);

}  // namespace spotsim

#endif  // SPOTSIM_ARRANGER_HPP_
