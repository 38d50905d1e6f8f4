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
#include "spotsim/migration_planner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "spotsim/errors.hpp"

namespace spotsim {

double MigrationAction::bytes() const {
  double total = 0.0;
  for (const Transfer& t : transfers) total += t.bytes;
  return total;
}

double MigrationPlan::total_bytes() const {
  double total = 0.0;
  for (const MigrationAction& a : actions) total += a.bytes();
  return total;
}

std::size_t MigrationPlan::transfer_count() const {
  std::size_t n = 0;
  for (const MigrationAction& a : actions) n += a.transfers.size();
  return n;
}

std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::kMigrateCache: return "migrate_cache";
    case ActionKind::kMigrateLayer: return "migrate_layer";
    case ActionKind::kStartStage: return "start_stage";
  }
  return "unknown";
}

nlohmann::json to_json(const MigrationPlan& plan) {
  nlohmann::json actions = nlohmann::json::array();
  for (const MigrationAction& a : plan.actions) {
    nlohmann::json ja = {{"kind", to_string(a.kind)}};
    if (a.kind == ActionKind::kMigrateLayer) ja["layer"] = a.layer;
    if (a.kind == ActionKind::kStartStage) ja["stage"] = a.stage;
    if (a.kind != ActionKind::kStartStage) {
      nlohmann::json ts = nlohmann::json::array();
      for (const Transfer& t : a.transfers) {
        nlohmann::json jt = {{"src", {t.src.instance, t.src.gpu}},
                             {"dst", {t.dst.instance, t.dst.gpu}},
                             {"bytes", t.bytes},
                             {"layer", t.layer},
                             {"range", {t.range.lo.to_string(), t.range.hi.to_string()}}};
        if (t.request >= 0) {
          jt["request"] = t.request;
          jt["tokens"] = t.tokens;
        }
        ts.push_back(std::move(jt));
      }
      ja["transfers"] = std::move(ts);
    }
    actions.push_back(std::move(ja));
  }
  return {{"u_max", std::isfinite(plan.u_max) ? nlohmann::json(plan.u_max) : nlohmann::json(nullptr)},
          {"peak_usage", plan.peak_usage},
          {"buffer_exceeded", plan.buffer_exceeded},
          {"num_stages", plan.num_stages},
          {"actions", std::move(actions)}};
}

namespace {

double action_peak(const LayerTraffic& t, const std::vector<double>& u) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i)
    peak = std::max(peak, u[i] + (i < t.recv.size() ? t.recv[i] : 0.0));
  return peak;
}

void apply_traffic(const LayerTraffic& t, std::vector<double>& u) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (i < t.recv.size()) u[i] += t.recv[i];
    if (i < t.release.size()) u[i] -= t.release[i];
  }
}

constexpr int kExactLayers = 16;

bool unbounded(double u_max) { return !(u_max > 0) || std::isinf(u_max); }

// Appends `deferred` one layer at a time: lowest running peak, then lowest
// usage left behind.
bool greedy_append(std::span<const LayerTraffic> layers, std::vector<double>& u,
                   std::vector<int> deferred, double running, double u_max,
                   std::vector<int>& order) {
  bool exceeded = false;
  while (!deferred.empty()) {
    std::size_t best = 0;
    std::pair<double, double> best_key{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t k = 0; k < deferred.size(); ++k) {
      const LayerTraffic& t = layers[deferred[k]];
      std::vector<double> after = u;
      apply_traffic(t, after);
      const std::pair<double, double> key{std::max(running, action_peak(t, u)),
                                          *std::max_element(after.begin(), after.end())};
      if (key < best_key) {
        best_key = key;
        best = k;
      }
    }
    const double peak = action_peak(layers[deferred[best]], u);
    if (peak > u_max) exceeded = true;
    running = std::max(running, peak);
    apply_traffic(layers[deferred[best]], u);
    order.push_back(deferred[best]);
    deferred.erase(deferred.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return exceeded;
}

// Exact min-max order by DP over applied-layer subsets; usage after a subset
// does not depend on the order it was applied in. Ties put lower layers first.
std::vector<int> exact_min_max_order(std::span<const LayerTraffic> layers,
                                     const std::vector<double>& initial_usage) {
  const int n = static_cast<int>(layers.size());
  const std::size_t states = std::size_t{1} << n;
  const std::size_t m = initial_usage.size();
  std::vector<double> usage(states * m);
  std::vector<double> best(states, std::numeric_limits<double>::infinity());
  std::vector<int> last(states, -1);
  double start = 0.0;
  for (double x : initial_usage) start = std::max(start, x);
  std::copy(initial_usage.begin(), initial_usage.end(), usage.begin());
  best[0] = start;
  for (std::size_t set = 1; set < states; ++set) {
    const int low = std::countr_zero(set);
    const std::size_t prev = set & (set - 1);
    std::vector<double> u(usage.begin() + prev * m, usage.begin() + (prev + 1) * m);
    apply_traffic(layers[low], u);
    std::copy(u.begin(), u.end(), usage.begin() + set * m);
  }
  for (std::size_t set = 1; set < states; ++set) {
    for (int x = 0; x < n; ++x) {
      if (!(set >> x & 1)) continue;
      const std::size_t prev = set & ~(std::size_t{1} << x);
      const double* u = usage.data() + prev * m;
      double peak = best[prev];
      for (std::size_t i = 0; i < m; ++i)
        peak = std::max(peak, u[i] + (i < layers[x].recv.size() ? layers[x].recv[i] : 0.0));
      if (peak <= best[set]) {
        best[set] = peak;
        last[set] = x;
      }
    }
  }
  std::vector<int> order(n);
  std::size_t set = states - 1;
  for (int k = n - 1; k >= 0; --k) {
    order[k] = last[set];
    set &= ~(std::size_t{1} << last[set]);
  }
  return order;
}

}  // namespace

LayerOrder memopt_layer_order(std::span<const LayerTraffic> layers,
                              const std::vector<double>& initial_usage, double u_max) {
  LayerOrder out;
  const int n = static_cast<int>(layers.size());
  std::vector<int> index(n);
  for (int i = 0; i < n; ++i) index[i] = i;
  if (unbounded(u_max) || order_peak(layers, initial_usage, index) <= u_max) {
    out.order = index;
    out.admitted_first_pass = n;
    return out;
  }

  if (n <= kExactLayers) {
    out.order = exact_min_max_order(layers, initial_usage);
    out.exceeded = order_peak(layers, initial_usage, out.order) > u_max;
    return out;
  }

  std::vector<double> u = initial_usage;
  std::vector<int> deferred;
  for (int i = 0; i < n; ++i) {
    if (action_peak(layers[i], u) <= u_max) {
      apply_traffic(layers[i], u);
      out.order.push_back(i);
    } else {
      deferred.push_back(i);
    }
  }
  out.admitted_first_pass = static_cast<int>(out.order.size());
  out.exceeded = greedy_append(layers, u, deferred, order_peak(layers, initial_usage, out.order),
                               u_max, out.order);
  if (!out.exceeded) return out;

  // Over the cap anyway: keep the lowest peak among this order, a greedy
  // order with no first pass, and plain index order.
  std::vector<int> pure;
  std::vector<double> u2 = initial_usage;
  greedy_append(layers, u2, index, order_peak(layers, initial_usage, {}), u_max, pure);
  double best = order_peak(layers, initial_usage, out.order);
  for (const std::vector<int>* cand : {&pure, &index}) {
    const double peak = order_peak(layers, initial_usage, *cand);
    if (peak < best) {
      best = peak;
      out.order = *cand;
      out.admitted_first_pass = 0;
    }
  }
  return out;
}

double order_peak(std::span<const LayerTraffic> layers, const std::vector<double>& initial_usage,
                  std::span<const int> order) {
  std::vector<double> u = initial_usage;
  double peak = 0.0;
  for (double x : u) peak = std::max(peak, x);
  for (int i : order) {
    peak = std::max(peak, action_peak(layers[i], u));
    apply_traffic(layers[i], u);
  }
  return peak;
}

namespace {

struct Holding {
  GpuId gpu;
  Interval range;
  int tokens = 0;
};

using CacheKey = std::pair<RequestId, int>;

IntervalSet model_held(const ContextInventory& inv, int layer) {
  IntervalSet s;
  for (const ModelShard& m : inv.model_shards)
    if (m.layer == layer) s.add(m.range);
  return s;
}

IntervalSet cache_held(const ContextInventory& inv, RequestId req, int layer, int min_tokens) {
  IntervalSet s;
  for (const CacheShard& c : inv.cache_shards)
    if (c.request == req && c.layer == layer && c.tokens_cached >= min_tokens) s.add(c.range);
  return s;
}

class SourceLoad {
 public:
  double load(const GpuId& g) const {
    auto it = sent_.find(g);
    return it == sent_.end() ? 0.0 : it->second;
  }
  void add(const GpuId& g, double b) { sent_[g] += b; }

 private:
  std::map<GpuId, double> sent_;
};

// Sources for a piece: same instance first, then least loaded, then id.
std::vector<const Holding*> order_sources(const std::vector<Holding>& holders, const GpuId& dst,
                                          const SourceLoad& load) {
  std::vector<const Holding*> out;
  for (const Holding& h : holders)
    if (h.gpu != dst) out.push_back(&h);
  std::stable_sort(out.begin(), out.end(), [&](const Holding* a, const Holding* b) {
    const int la = a->gpu.instance == dst.instance ? 0 : 1;
    const int lb = b->gpu.instance == dst.instance ? 0 : 1;
    return std::make_tuple(la, load.load(a->gpu), a->gpu) <
           std::make_tuple(lb, load.load(b->gpu), b->gpu);
  });
  return out;
}

double layer_bytes(const ModelSpec& model, const Interval& iv) {
  return model.bytes_per_layer * iv.length().value();
}

double kv_bytes(const ModelSpec& model, const Interval& iv, int tokens) {
  return model.kv_bytes_per_token_per_layer * tokens * iv.length().value();
}

const std::vector<CachedRequest>& requests_for(const PipelineRequests& r, int d) {
  static const std::vector<CachedRequest> kNone;
  return d < static_cast<int>(r.size()) ? r[d] : kNone;
}

}  // namespace

MigrationPlan plan_migration(const DeviceMapping& mapping, std::span<const GpuNode> old_layout,
                             const ModelSpec& model, const PipelineRequests& requests,
                             const PlannerOptions& options) {
  const ParallelConfig& cfg = mapping.config;
  MigrationPlan plan;
  plan.u_max = unbounded(options.u_max) ? std::numeric_limits<double>::infinity() : options.u_max;
  plan.num_stages = cfg.P;

  std::map<GpuId, const ContextInventory*> inventory_of;
  int max_instance = options.num_instances - 1;
  for (const GpuNode& n : old_layout) {
    if (!inventory_of.emplace(n.id, &n.inventory).second)
      throw PlanningError("duplicate GPU in layout");
    max_instance = std::max(max_instance, n.id.instance);
  }
  const int num_instances = max_instance + 1;

  std::map<GpuId, ContextInventory> required;
  for (const auto& [gpu, pos] : mapping.assignment) {
    if (!valid_position(cfg, pos)) throw PlanningError("mapping position outside config");
    if (!inventory_of.count(gpu))
      throw PlanningError("mapping uses GPU (" + std::to_string(gpu.instance) + "," +
                          std::to_string(gpu.gpu) + ") absent from layout");
    if (required.count(gpu)) throw PlanningError("GPU mapped to two positions");
    required[gpu] = required_context_with_cache(cfg, pos, model, requests_for(requests, pos.d));
  }

  std::map<int, std::vector<Holding>> model_holders;
  std::map<CacheKey, std::vector<Holding>> cache_holders;
  for (const GpuNode& n : old_layout) {
    for (const ModelShard& m : n.inventory.model_shards)
      model_holders[m.layer].push_back({n.id, m.range, 0});
    for (const CacheShard& c : n.inventory.cache_shards)
      cache_holders[{c.request, c.layer}].push_back({n.id, c.range, c.tokens_cached});
  }

  SourceLoad load;
  std::vector<std::vector<Transfer>> layer_transfers(model.num_layers);
  std::vector<Transfer> cache_transfers;
  std::set<RequestId> lost_cache;

  for (const auto& [gpu, pos] : mapping.assignment) {
    const ContextInventory& have = *inventory_of.at(gpu);
    const ContextInventory& need = required.at(gpu);
    for (const ModelShard& shard : need.model_shards) {
      IntervalSet missing = IntervalSet(shard.range).minus(model_held(have, shard.layer));
      if (missing.empty()) continue;
      for (const Holding* h : order_sources(model_holders[shard.layer], gpu, load)) {
        const IntervalSet take = missing.intersected(h->range);
        for (const Interval& piece : take.parts()) {
          const double b = layer_bytes(model, piece);
          layer_transfers[shard.layer].push_back({h->gpu, gpu, b, shard.layer, piece, -1, 0});
          load.add(h->gpu, b);
          missing.subtract(piece);
        }
        if (missing.empty()) break;
      }
      for (const Interval& piece : missing.parts())
        plan.storage_fetches.push_back({gpu, shard.layer, piece, layer_bytes(model, piece)});
    }
    for (const CacheShard& shard : need.cache_shards) {
      IntervalSet missing = IntervalSet(shard.range).minus(
          cache_held(have, shard.request, shard.layer, shard.tokens_cached));
      if (missing.empty()) continue;
      std::vector<Holding> usable;
      for (const Holding& h : cache_holders[{shard.request, shard.layer}])
        if (h.tokens >= shard.tokens_cached) usable.push_back(h);
      for (const Holding* h : order_sources(usable, gpu, load)) {
        const IntervalSet take = missing.intersected(h->range);
        for (const Interval& piece : take.parts()) {
          const double b = kv_bytes(model, piece, shard.tokens_cached);
          cache_transfers.push_back(
              {h->gpu, gpu, b, shard.layer, piece, shard.request, shard.tokens_cached});
          load.add(h->gpu, b);
          missing.subtract(piece);
        }
        if (missing.empty()) break;
      }
      if (!missing.empty()) lost_cache.insert(shard.request);
    }
  }
  plan.lost_cache_requests.assign(lost_cache.begin(), lost_cache.end());

  // Sender-side releases: a sent piece the sender does not need afterwards
  // gives its memory back, once.
  std::map<std::tuple<GpuId, RequestId, int>, IntervalSet> freed;
  auto releases_for = [&](const std::vector<Transfer>& ts) {
    std::map<GpuId, double> rel;
    for (const Transfer& t : ts) {
      IntervalSet kept;
      if (auto it = required.find(t.src); it != required.end())
        kept = t.request < 0 ? model_held(it->second, t.layer)
                             : cache_held(it->second, t.request, t.layer, 0);
      auto& done = freed[{t.src, t.request, t.layer}];
      IntervalSet gone = IntervalSet(t.range).minus(kept).minus(done);
      for (const Interval& p : gone.parts()) {
        rel[t.src] += t.request < 0 ? layer_bytes(model, p) : kv_bytes(model, p, t.tokens);
        done.add(p);
      }
    }
    std::vector<BufferRelease> out;
    for (const auto& [g, b] : rel) out.push_back({g, b});
    return out;
  };
  auto traffic_of = [&](const std::vector<Transfer>& ts, const std::vector<BufferRelease>& rel) {
    LayerTraffic t;
    t.recv.assign(num_instances, 0.0);
    t.release.assign(num_instances, 0.0);
    for (const Transfer& x : ts) t.recv[x.dst.instance] += x.bytes;
    for (const BufferRelease& r : rel) t.release[r.gpu.instance] += r.bytes;
    return t;
  };

  std::vector<double> usage(num_instances, 0.0);
  if (!cache_transfers.empty()) {
    MigrationAction a;
    a.kind = ActionKind::kMigrateCache;
    a.transfers = std::move(cache_transfers);
    a.releases = releases_for(a.transfers);
    apply_traffic(traffic_of(a.transfers, a.releases), usage);
    plan.actions.push_back(std::move(a));
  }

  std::vector<std::vector<BufferRelease>> layer_releases(model.num_layers);
  std::vector<LayerTraffic> traffic(model.num_layers);
  for (int l = 0; l < model.num_layers; ++l) {
    layer_releases[l] = releases_for(layer_transfers[l]);
    traffic[l] = traffic_of(layer_transfers[l], layer_releases[l]);
  }

  std::vector<int> order;
  if (options.memory_optimized) {
    LayerOrder lo = memopt_layer_order(traffic, usage, options.u_max);
    order = std::move(lo.order);
  } else {
    order.resize(model.num_layers);
    for (int l = 0; l < model.num_layers; ++l) order[l] = l;
  }

  // Remaining layers with transfers, per new stage.
  std::vector<int> pending(cfg.P, 0);
  for (int l = 0; l < model.num_layers; ++l)
    if (!layer_transfers[l].empty()) ++pending[stage_of_layer(model.num_layers, cfg.P, l)];
  std::vector<char> started(cfg.P, 0);
  auto start_ready = [&]() {
    for (int p = 0; p < cfg.P; ++p) {
      if (started[p] || pending[p] > 0) continue;
      MigrationAction s;
      s.kind = ActionKind::kStartStage;
      s.stage = p;
      plan.actions.push_back(std::move(s));
      started[p] = 1;
    }
  };
  start_ready();
  for (int l : order) {
    if (layer_transfers[l].empty()) continue;
    MigrationAction a;
    a.kind = ActionKind::kMigrateLayer;
    a.layer = l;
    a.transfers = std::move(layer_transfers[l]);
    a.releases = std::move(layer_releases[l]);
    plan.actions.push_back(std::move(a));
    --pending[stage_of_layer(model.num_layers, cfg.P, l)];
    start_ready();
  }

  plan.peak_usage = simulate_buffer_usage(plan, num_instances);
  for (double p : plan.peak_usage)
    if (p > plan.u_max) plan.buffer_exceeded = true;
  return plan;
}

std::vector<double> simulate_buffer_usage(const MigrationPlan& plan, int num_instances) {
  std::vector<double> u(num_instances, 0.0), peak(num_instances, 0.0);
  for (const MigrationAction& a : plan.actions) {
    if (a.kind == ActionKind::kStartStage) continue;
    for (const Transfer& t : a.transfers) {
      if (t.dst.instance >= num_instances) throw PlanningError("transfer to unknown instance");
      u[t.dst.instance] += t.bytes;
    }
    for (int i = 0; i < num_instances; ++i) peak[i] = std::max(peak[i], u[i]);
    for (const BufferRelease& r : a.releases) {
      if (r.gpu.instance >= num_instances) throw PlanningError("release on unknown instance");
      u[r.gpu.instance] -= r.bytes;
    }
  }
  return peak;
}

bool plan_realizes_mapping(const MigrationPlan& plan, std::span<const GpuNode> old_layout,
                           const DeviceMapping& mapping, const ModelSpec& model,
                           const PipelineRequests& requests) {
  std::map<GpuId, ContextInventory> held;
  for (const GpuNode& n : old_layout) held[n.id] = n.inventory;

  // Each received piece must be new to its receiver: moved exactly once.
  std::map<std::tuple<GpuId, RequestId, int>, IntervalSet> received;
  for (const MigrationAction& a : plan.actions) {
    for (const Transfer& t : a.transfers) {
      auto& got = received[{t.dst, t.request, t.layer}];
      if (!got.intersected(t.range).empty()) return false;
      IntervalSet before = t.request < 0 ? model_held(held[t.dst], t.layer)
                                         : cache_held(held[t.dst], t.request, t.layer, t.tokens);
      if (!before.intersected(t.range).empty()) return false;
      got.add(t.range);
    }
  }
  for (const auto& [key, set] : received) {
    const auto& [gpu, req, layer] = key;
    for (const Interval& p : set.parts()) {
      if (req < 0) {
        held[gpu].model_shards.push_back({layer, p});
      } else {
        int tokens = 0;
        for (const MigrationAction& a : plan.actions)
          for (const Transfer& t : a.transfers)
            if (t.dst == gpu && t.request == req && t.layer == layer) tokens = t.tokens;
        held[gpu].cache_shards.push_back({req, layer, p, tokens});
      }
    }
  }
  for (const StorageFetch& f : plan.storage_fetches)
    held[f.dst].model_shards.push_back({f.layer, f.range});

  const std::set<RequestId> lost(plan.lost_cache_requests.begin(), plan.lost_cache_requests.end());
  for (const auto& [gpu, pos] : mapping.assignment) {
    const ContextInventory need = required_context_with_cache(mapping.config, pos, model,
                                                              requests_for(requests, pos.d));
    const ContextInventory& have = held[gpu];
    for (const ModelShard& s : need.model_shards)
      if (!model_held(have, s.layer).covers(s.range)) return false;
    for (const CacheShard& s : need.cache_shards) {
      if (lost.count(s.request)) continue;
      if (!cache_held(have, s.request, s.layer, s.tokens_cached).covers(s.range)) return false;
    }
  }
  return true;
}

}  // namespace spotsim
