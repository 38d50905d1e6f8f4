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
#ifndef SPOTSIM_MIGRATION_PLAN_HPP_
#define SPOTSIM_MIGRATION_PLAN_HPP_

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spotsim/fraction.hpp"

namespace spotsim {

// Physical GPU: `instance` indexes the caller's instance list.
struct GpuId {
  int instance = 0;
  int gpu = 0;
  friend auto operator<=>(const GpuId&, const GpuId&) = default;
};

// One contiguous piece of a layer's parameters, or of one request's KV
// cache for that layer when `request` >= 0.
struct Transfer {
  GpuId src;
  GpuId dst;
  double bytes = 0.0;
  int layer = 0;
  Interval range;
  std::int64_t request = -1;
  int tokens = 0;
};

// Buffer memory a sender gives back once a shard it no longer needs is sent.
struct BufferRelease {
  GpuId gpu;
  double bytes = 0.0;
};

enum class ActionKind { kMigrateCache, kMigrateLayer, kStartStage };

struct MigrationAction {
  ActionKind kind = ActionKind::kStartStage;
  int layer = -1;  // kMigrateLayer
  int stage = -1;  // kStartStage
  std::vector<Transfer> transfers;
  std::vector<BufferRelease> releases;

  double bytes() const;
};

// Bytes no surviving GPU holds; they must come from storage.
struct StorageFetch {
  GpuId dst;
  int layer = 0;
  Interval range;
  double bytes = 0.0;
};

struct MigrationPlan {
  std::vector<MigrationAction> actions;
  double u_max = 0.0;
  std::vector<double> peak_usage;  // per instance, bytes
  bool buffer_exceeded = false;
  int num_stages = 0;
  std::vector<StorageFetch> storage_fetches;
  std::vector<std::int64_t> lost_cache_requests;  // cache with no live holder

  double total_bytes() const;
  std::size_t transfer_count() const;
};

std::string to_string(ActionKind k);
nlohmann::json to_json(const MigrationPlan& plan);

}  // namespace spotsim

#endif  // SPOTSIM_MIGRATION_PLAN_HPP_
