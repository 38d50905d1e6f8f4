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
#include "spotsim/arranger.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace spotsim {

std::string to_string(AfterAction a) {
  switch (a) {
    case AfterAction::kMigrateWithCache: return "migrate_with_cache";
    case AfterAction::kRerouteWithoutCache: return "reroute_without_cache";
    case AfterAction::kJoinAndMigrate: return "join_and_migrate";
  }
  return "unknown";
}

DecodeLatency linear_latency(double init_remaining, double t_dec) {
  return [=](int s) { return s <= 0 ? 0.0 : init_remaining + s * t_dec; };
}

DecodeLatency profile_latency(const PerfProfile& profile, const ParallelConfig& config, int s_in,
                              int tokens_done) {
  const double init =
      tokens_done == 0 ? init_time(profile, config.P, config.M, config.B, s_in) : 0.0;
  return linear_latency(init, decode_step_time(profile, config.P, config.M, config.B));
}

namespace {

// Largest S in [0, hi] with pred(S), given pred is true-then-false.
int last_true(int hi, const std::function<bool(int)>& pred) {
  int lo = 0;
  if (!pred(0)) return -1;
  while (lo < hi) {
    const int mid = lo + (hi - lo + 1) / 2;
    if (pred(mid)) lo = mid;
    else hi = mid - 1;
  }
  return lo;
}

}  // namespace

Arrangement arrange_preemption(const GraceContext& ctx) {
  const int R = std::max(0, ctx.s_remaining);
  const double bound = ctx.remaining - ctx.t_mig;
  const int s = last_true(R, [&](int k) { return ctx.latency(k) < bound; });
  Arrangement out;
  out.S_t = std::max(0, s);
  out.action = AfterAction::kMigrateWithCache;
  if (out.S_t == R && R > 0) return out;  // finishes before the commit
  if (!(ctx.t_mig < ctx.latency(out.S_t))) {
    out.S_t = 0;
    out.action = AfterAction::kRerouteWithoutCache;
  }
  return out;
}

Arrangement arrange_acquisition(const GraceContext& ctx) {
  const int R = std::max(0, ctx.s_remaining);
  Arrangement out;
  out.action = AfterAction::kJoinAndMigrate;
  const int below = last_true(R, [&](int k) { return ctx.latency(k) < ctx.remaining; });
  out.S_t = below < 0 ? 0 : std::min(R, below + 1);
  return out;
}

std::vector<ScheduledMigration> resolve_conflicts(std::span<const PendingMigration> pending) {
  std::vector<std::size_t> idx(pending.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const bool pa = pending[a].kind == GraceKind::kPreemption;
    const bool pb = pending[b].kind == GraceKind::kPreemption;
    if (pa != pb) return pa;
    return pending[a].start < pending[b].start;
  });

  std::vector<ScheduledMigration> out(pending.size());
  std::vector<std::size_t> placed;
  auto shares = [&](std::size_t a, std::size_t b) {
    for (int x : pending[a].instances)
      for (int y : pending[b].instances)
        if (x == y) return true;
    return false;
  };
  for (std::size_t i : idx) {
    double start = pending[i].start;
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::size_t j : placed) {
        if (!shares(i, j)) continue;
        const double end = start + pending[i].duration;
        const bool overlap = start < out[j].end && out[j].start < end;
        const bool touching = pending[i].duration == 0.0 && start >= out[j].start &&
                              start < out[j].end;
        if (overlap || touching) {
          start = out[j].end;
          moved = true;
        }
      }
    }
    out[i] = {start, start + pending[i].duration, start != pending[i].start};
    placed.push_back(i);
  }
  return out;
}

RecoveryAction handle_early_loss(const EarlyLoss& loss, std::span<const GpuNode> layout,
                                 const PerfProfile& profile) {
  RecoveryAction out;
  if (loss.migration_completed) return out;

  std::set<RequestId> dropped;
  std::vector<IntervalSet> covered(profile.model.num_layers);
  for (const GpuNode& n : layout) {
    if (n.id.instance == loss.lost_instance) {
      for (const CacheShard& c : n.inventory.cache_shards) dropped.insert(c.request);
      continue;
    }
    for (const ModelShard& m : n.inventory.model_shards)
      if (m.layer >= 0 && m.layer < profile.model.num_layers) covered[m.layer].add(m.range);
  }
  out.dropped_cache.assign(dropped.begin(), dropped.end());

  const Interval whole{Fraction(0), Fraction(1)};
  const bool intact = std::all_of(covered.begin(), covered.end(),
                                  [&](const IntervalSet& s) { return s.covers(whole); });
  if (intact) {
    out.kind = RecoveryKind::kMigrateFromReplica;
    return out;
  }
  out.kind = RecoveryKind::kRestartFromStorage;
  out.source = loss.local_disk_available ? RestartSource::kLocalDisk : RestartSource::kRemoteStorage;
  out.cost = restart_cost(profile, out.source, loss.migration_baseline);
  return out;
}

}  // namespace spotsim
