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
#include "spotsim/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spotsim/errors.hpp"

namespace spotsim {

namespace {

std::string key_string(int P, int M, int B) {
  return std::to_string(P) + "," + std::to_string(M) + "," + std::to_string(B);
}

}  // namespace

const ExecEntry& PerfProfile::entry(int P, int M, int B) const {
  auto it = exec.find(ExecKey{P, M, B});
  if (it != exec.end()) return it->second;
  if (allow_nearest) {
    const ExecEntry* best = nullptr;
    int best_dist = std::numeric_limits<int>::max();
    for (const auto& [k, e] : exec) {
      if (k.P != P || k.M != M) continue;
      const int dist = std::abs(k.B - B);
      if (dist < best_dist) {
        best_dist = dist;
        best = &e;
      }
    }
    if (best) return *best;
  }
  throw ProfileMissError("profile '" + model.name + "' has no entry for P,M,B=" +
                         key_string(P, M, B));
}

int PerfProfile::batch_bucket(int P, int M, int b) const {
  auto it = exec.lower_bound(ExecKey{P, M, b});
  if (it != exec.end() && it->first.P == P && it->first.M == M) return it->first.B;
  throw ProfileMissError("profile '" + model.name + "' has no batch >= " + std::to_string(b) +
                         " for P,M=" + std::to_string(P) + "," + std::to_string(M));
}

std::vector<ExecKey> PerfProfile::keys() const {
  std::vector<ExecKey> out;
  for (const auto& [k, e] : exec) out.push_back(k);
  return out;
}

void PerfProfile::validate() const {
  if (model.num_layers < 1) throw ConfigError("model.num_layers must be >= 1");
  if (!(model.bytes_per_layer > 0)) throw ConfigError("model.bytes_per_layer must be > 0");
  if (!(pipeline_efficiency > 0 && pipeline_efficiency <= 1))
    throw ConfigError("pipeline_efficiency must be in (0, 1]");
  if (!(bandwidth > 0)) throw ConfigError("bandwidth must be > 0");
  if (transfer_latency < 0 || restart_load_time < 0)
    throw ConfigError("latencies must be >= 0");
  if (!(local_restart_ratio > 0 && remote_restart_ratio > 0))
    throw ConfigError("restart ratios must be > 0");
  if (gpus_per_instance < 1) throw ConfigError("gpus_per_instance must be >= 1");
  if (!(prices.spot_price > 0 && prices.ondemand_price > 0))
    throw ConfigError("prices must be > 0");
  for (const auto& [k, e] : exec) {
    if (!(e.t_init > 0 && e.t_dec > 0))
      throw ConfigError("exec entry " + key_string(k.P, k.M, k.B) + " must be positive");
  }
}

double init_time(const PerfProfile& profile, int P, int M, int B, int s_in) {
  const ExecEntry& e = profile.entry(P, M, B);
  return e.t_init * static_cast<double>(s_in) / profile.init_reference_s_in;
}

double decode_step_time(const PerfProfile& profile, int P, int M, int B) {
  return profile.entry(P, M, B).t_dec;
}

double exec_latency(const PerfProfile& profile, const ParallelConfig& config, int s_in,
                    int s_out, int B) {
  const ExecEntry& e = profile.entry(config.P, config.M, B);
  return e.t_init * static_cast<double>(s_in) / profile.init_reference_s_in +
         static_cast<double>(s_out) * e.t_dec;
}

double exec_latency_exact(const std::function<double(int)>& t_exe, int s_in, int s_out) {
  double total = t_exe(s_in);
  for (int i = 1; i <= s_out; ++i) total += t_exe(s_in + i);
  return total;
}

double throughput(const PerfProfile& profile, const ParallelConfig& config, int s_in,
                  int s_out) {
  const double l_exe = exec_latency(profile, config, s_in, s_out, config.B);
  return static_cast<double>(config.D * config.B) * config.P * profile.pipeline_efficiency /
         l_exe;
}

double action_time(const MigrationAction& action, const PerfProfile& profile) {
  if (action.transfers.empty()) return 0.0;
  std::map<GpuId, double> sent;
  std::map<GpuId, double> recv;
  for (const Transfer& t : action.transfers) {
    sent[t.src] += t.bytes;
    recv[t.dst] += t.bytes;
  }
  double port = 0.0;
  for (const auto& [g, b] : sent) port = std::max(port, b);
  for (const auto& [g, b] : recv) port = std::max(port, b);
  return port / profile.bandwidth + profile.transfer_latency;
}

MigrationCost migration_cost(const MigrationPlan& plan, const PerfProfile& profile,
                             double stage_step_time) {
  MigrationCost cost;
  cost.stage_ready.assign(plan.num_stages, 0.0);
  double clock = 0.0;
  bool any_start = false;
  for (const MigrationAction& a : plan.actions) {
    if (a.kind == ActionKind::kStartStage) {
      if (a.stage >= 0 && a.stage < plan.num_stages) cost.stage_ready[a.stage] = clock;
      any_start = true;
      continue;
    }
    clock += action_time(a, profile);
    for (const Transfer& t : a.transfers)
      cost.serial_sum += t.bytes / profile.bandwidth + profile.transfer_latency;
  }
  cost.total = clock;
  if (!any_start) {
    cost.progressive_stall = clock;
    return cost;
  }
  // A resumed iteration reaches stage p after p stage steps; it stalls
  // wherever that stage is not ready yet.
  double stall = 0.0;
  for (int p = 0; p < plan.num_stages; ++p)
    stall = std::max(stall, cost.stage_ready[p] - p * stage_step_time);
  cost.progressive_stall = std::min(stall, cost.total);
  return cost;
}

double restart_cost(const PerfProfile& profile, RestartSource source, double migration_baseline) {
  const double ratio = source == RestartSource::kLocalDisk ? profile.local_restart_ratio
                                                           : profile.remote_restart_ratio;
  return ratio * migration_baseline;
}

CostSummary monetary_cost(std::span<const UsageRecord> usage, const PriceSheet& prices,
                          double tokens_served) {
  std::map<std::string, std::vector<const UsageRecord*>> by_instance;
  for (const UsageRecord& r : usage) {
    if (r.end < r.start) throw AccountingError("usage interval ends before it starts: " + r.instance);
    by_instance[r.instance].push_back(&r);
  }
  for (auto& [id, rs] : by_instance) {
    std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->start < b->start; });
    for (std::size_t i = 1; i < rs.size(); ++i)
      if (rs[i]->start < rs[i - 1]->end)
        throw AccountingError("overlapping usage intervals for instance " + id);
  }
  // Hours are summed per kind before pricing so a bill is exact whenever the
  // hour totals are.
  double spot_seconds = 0.0;
  double ondemand_seconds = 0.0;
  for (const UsageRecord& r : usage)
    (r.kind == InstanceKind::kSpot ? spot_seconds : ondemand_seconds) += r.end - r.start;
  CostSummary out;
  out.total_usd = spot_seconds / 3600.0 * prices.spot_price +
                  ondemand_seconds / 3600.0 * prices.ondemand_price;
  out.per_token_usd = tokens_served > 0 ? out.total_usd / tokens_served : 0.0;
  return out;
}

}  // namespace spotsim
