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
#include "spotsim/simulator.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>

#include "spotsim/arranger.hpp"
#include "spotsim/controller.hpp"
#include "spotsim/device_mapper.hpp"
#include "spotsim/errors.hpp"
#include "spotsim/migration_planner.hpp"
#include "spotsim/profile_io.hpp"

namespace spotsim {

SimInputs load_inputs(const SimConfig& config) {
  SimInputs in;
  in.config = config;
  in.profile = load_profile(config.profile_path);
  if (!config.trace_path.empty()) in.trace = load_trace(config.trace_path, config.grace);
  if (config.workload.type == WorkloadConfig::Type::kArrivalFile) {
    in.arrivals = load_arrivals(config.workload.arrival_path, config.s_in, config.s_out);
  } else {
    for (double t : gamma_arrivals(config.workload.rate, config.workload.cv, config.duration,
                                   config.workload.seed))
      in.arrivals.push_back({t, config.s_in, config.s_out});
  }
  return in;
}

namespace {

constexpr double kEps = 1e-9;

enum class Ev { kTrace, kDeadline, kReady, kDecide, kCommit, kResume, kArrival, kIssue, kDone };

// Trace-driven first, then decisions, then arrivals, then completions.
int ev_class(Ev e) {
  switch (e) {
    case Ev::kTrace:
    case Ev::kDeadline:
    case Ev::kReady: return 0;
    case Ev::kDecide:
    case Ev::kCommit:
    case Ev::kResume: return 1;
    case Ev::kArrival: return 2;
    case Ev::kIssue:
    case Ev::kDone: return 3;
  }
  return 3;
}

struct Event {
  double t = 0.0;
  int cls = 0;
  std::uint64_t seq = 0;
  Ev type = Ev::kTrace;
  int a = 0;
  std::uint64_t b = 0;
  std::string id;
};

struct EventLater {
  bool operator()(const Event& x, const Event& y) const {
    return std::tie(x.t, x.cls, x.seq) > std::tie(y.t, y.cls, y.seq);
  }
};

struct Inst {
  std::string id;
  InstanceKind kind = InstanceKind::kSpot;
  InstanceStatus status = InstanceStatus::kActive;
  int order = 0;
  bool warm = false;  // has served before, so weights can reload from local disk
  double start = 0.0;
  double ready_at = 0.0;
  double deadline = 0.0;
  double end = -1.0;
};

struct PhysGpu {
  std::string inst;
  int gpu = 0;
  friend auto operator<=>(const PhysGpu&, const PhysGpu&) = default;
};

struct Batch {
  std::vector<RequestId> reqs;
  int s_in = 0;
  int s_out = 0;
  int tokens = 0;  // committed decode steps
  int stop_at = INT_MAX;
  bool running = false;
  double seg_start = 0.0;
  double t_init = 0.0;  // owed in the current segment
  double t_dec = 0.0;
  std::uint64_t run = 0;

  int tokens_at(double t) const {
    if (!running) return tokens;
    const double e = t - seg_start - t_init;
    if (e < -kEps) return tokens;
    const int more = static_cast<int>(std::floor((e + kEps) / t_dec));
    return std::min(s_out, tokens + std::max(0, more));
  }
  double end_time() const { return seg_start + t_init + (s_out - tokens) * t_dec; }
  // Time from `now` until S more tokens exist.
  double latency_from(double now, int S) const {
    if (S <= 0) return 0.0;
    const int k0 = tokens_at(now);
    return seg_start + t_init + (k0 - tokens + S) * t_dec - now;
  }
};

struct Pipeline {
  std::vector<PhysGpu> gpus;
  std::vector<int> batches;
  double ready_at = 0.0;
  double next_issue = 0.0;
  double issue_at = -1.0;
};

struct PendingCommit {
  std::uint64_t gen = 0;
  ParallelConfig next;
  std::vector<std::string> chosen;
  std::size_t log_index = 0;
  int release_members = 0;
  GraceKind kind = GraceKind::kPreemption;
  double duration_estimate = 0.0;
};

struct Window {
  double start = 0.0;
  double end = 0.0;
  std::vector<std::string> instances;
};

// A migration prepared against the current state.
struct Prepared {
  DeviceMapping mapping;
  MigrationPlan plan;
  MigrationCost cost;
  std::vector<std::string> local;                // local instance index -> id
  std::vector<std::vector<int>> batches_for;     // new pipeline -> batch ids
  std::vector<RequestId> dropped_requests;       // lose their cache
  std::vector<int> dropped_batches;
  std::map<int, std::vector<RequestId>> kept_reqs;  // surviving requests per kept batch
};

class Simulator {
 public:
  explicit Simulator(const SimInputs& in)
      : cfg_(in.config), prof_(in.profile), trace_(in.trace), arrivals_(in.arrivals) {
    prof_.validate();
    G_ = prof_.gpus_per_instance;
    report_.policy = to_string(cfg_.policy);
    report_.horizon = cfg_.duration;
  }

  MetricsReport run();

 private:
  // Events.
  void push(double t, Ev type, int a = 0, std::uint64_t b = 0, std::string id = {}) {
    queue_.push(Event{t, ev_class(type), seq_++, type, a, b, std::move(id)});
  }
  void request_decide(double t) {
    if (decide_at_ && std::abs(*decide_at_ - t) < kEps) return;
    decide_at_ = t;
    push(t, Ev::kDecide);
  }

  // Instances.
  Inst& inst(const std::string& id) {
    auto it = insts_.find(id);
    if (it == insts_.end()) throw Error("trace names unknown instance '" + id + "'");
    return it->second;
  }
  bool alive(const std::string& id) const {
    auto it = insts_.find(id);
    return it != insts_.end() && it->second.status != InstanceStatus::kReleased;
  }
  bool usable(const Inst& i) const {
    return i.status == InstanceStatus::kActive || i.status == InstanceStatus::kAllocating;
  }
  std::vector<const Inst*> ordered_instances() const {
    std::vector<const Inst*> v;
    for (const auto& [id, i] : insts_) v.push_back(&i);
    std::sort(v.begin(), v.end(), [](const Inst* a, const Inst* b) { return a->order < b->order; });
    return v;
  }
  int count_available(bool include_allocating) const {
    int n = 0;
    for (const auto& [id, i] : insts_)
      if (i.status == InstanceStatus::kActive ||
          (include_allocating && i.status == InstanceStatus::kAllocating))
        ++n;
    return n;
  }
  void release(const std::string& id, double t) {
    Inst& i = inst(id);
    if (i.status == InstanceStatus::kReleased) return;
    i.status = InstanceStatus::kReleased;
    i.end = t;
  }
  std::string add_instance(const std::string& id, InstanceKind kind, double t, double ready_in,
                           bool warm) {
    if (insts_.count(id)) throw Error("instance '" + id + "' acquired twice");
    Inst i;
    i.id = id;
    i.kind = cfg_.instance_kind_override ? *cfg_.instance_kind_override : kind;
    i.status = ready_in > 0 ? InstanceStatus::kAllocating : InstanceStatus::kActive;
    i.order = next_order_++;
    i.warm = warm;
    i.start = t;
    i.ready_at = t + ready_in;
    insts_[id] = i;
    if (ready_in > 0) push(t + ready_in, Ev::kReady, 0, 0, id);
    return id;
  }

  // Batches and dispatch.
  int slots() const {
    return std::max(1, static_cast<int>(std::ceil(config_->P * prof_.pipeline_efficiency - kEps)));
  }
  void start_batch(int bid, double t);
  void stop_batch(int bid, double t);
  void complete_batch(int bid, double t);
  void requeue_batch(int bid);
  void requeue_request(RequestId r);
  void remove_batch_from_pipelines(int bid);
  void schedule_issue(int d, double t);
  void try_dispatch(double t);
  bool pipeline_uses(const Pipeline& p, const std::string& id) const {
    for (const PhysGpu& g : p.gpus)
      if (g.inst == id) return true;
    return false;
  }
  bool pipeline_broken(const Pipeline& p) const {
    for (const PhysGpu& g : p.gpus)
      if (!alive(g.inst)) return true;
    return false;
  }

  // Control plane.
  double alpha(double t) const;
  std::optional<ParallelConfig> choose_config(int n_available, double t);
  std::vector<std::string> choose_instances(const ParallelConfig& next, bool include_allocating);
  void apply_delta(const ParallelConfig& next, int n_available, double t, int* release_members);
  std::vector<std::string> member_set() const {
    std::vector<std::string> v = members_;
    std::sort(v.begin(), v.end());
    return v;
  }
  void bootstrap(double t);
  void stop_serving(double t);
  void rebuild_pipelines(const ParallelConfig& next, const std::vector<std::string>& chosen,
                         const DeviceMapping& mapping, const std::vector<std::string>& local);
  double restart_stall(const ParallelConfig& next, const std::vector<std::string>& who) const;

  void decide_spotserve(double t);
  void decide_reparallelization(double t);
  void decide_rerouting(double t);
  Prepared prepare(double t, const ParallelConfig& next, const std::vector<std::string>& chosen);
  void commit(double t, std::uint64_t gen);
  void resume(double t, std::uint64_t gen);

  void on_trace(const TraceEvent& e, double t);
  void on_deadline(const std::string& id, double t);
  void on_ready(const std::string& id, double t);

  void finish();

  SimConfig cfg_;
  PerfProfile prof_;
  const std::vector<TraceEvent>& trace_;
  const std::vector<Arrival>& arrivals_;
  int G_ = 1;

  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t seq_ = 0;
  std::optional<double> decide_at_;

  std::map<std::string, Inst> insts_;
  int next_order_ = 0;
  int ondemand_serial_ = 0;

  std::optional<ParallelConfig> config_;
  std::optional<std::pair<int, int>> fixed_shape_;
  std::vector<std::string> members_;
  std::map<PhysGpu, TopologyPosition> layout_;  // current mapping
  std::vector<Pipeline> pipes_;
  std::map<int, Batch> batches_;
  std::map<int, int> pipe_of_batch_;
  int next_batch_ = 0;

  std::set<std::pair<double, RequestId>> waiting_;
  std::vector<RequestRecord> records_;
  std::vector<double> arrival_times_;

  std::optional<PendingCommit> pending_;
  std::uint64_t gen_ = 0;
  std::uint64_t resume_gen_ = 0;
  std::vector<Window> windows_;
  std::string reason_ = "initial";

  MetricsReport report_;
};

void Simulator::start_batch(int bid, double t) {
  Batch& b = batches_.at(bid);
  const int bucket = prof_.batch_bucket(config_->P, config_->M, static_cast<int>(b.reqs.size()));
  b.t_init = b.tokens == 0 ? init_time(prof_, config_->P, config_->M, bucket, b.s_in) : 0.0;
  b.t_dec = decode_step_time(prof_, config_->P, config_->M, bucket);
  b.seg_start = t;
  b.running = true;
  ++b.run;
  push(b.end_time(), Ev::kDone, bid, b.run);
}

void Simulator::stop_batch(int bid, double t) {
  Batch& b = batches_.at(bid);
  if (!b.running) return;
  b.tokens = std::min(b.tokens_at(t), b.stop_at);
  b.running = false;
  b.stop_at = INT_MAX;
  ++b.run;
}

void Simulator::remove_batch_from_pipelines(int bid) {
  auto it = pipe_of_batch_.find(bid);
  if (it != pipe_of_batch_.end()) {
    if (it->second >= 0 && it->second < static_cast<int>(pipes_.size())) {
      auto& v = pipes_[it->second].batches;
      v.erase(std::remove(v.begin(), v.end(), bid), v.end());
    }
    pipe_of_batch_.erase(it);
  }
  batches_.erase(bid);
}

void Simulator::complete_batch(int bid, double t) {
  for (RequestId r : batches_.at(bid).reqs) records_[r].completion = t;
  remove_batch_from_pipelines(bid);
}

void Simulator::requeue_request(RequestId r) {
  ++records_[r].restarts;
  waiting_.insert({records_[r].arrival, r});
}

void Simulator::requeue_batch(int bid) {
  for (RequestId r : batches_.at(bid).reqs) requeue_request(r);
  remove_batch_from_pipelines(bid);
}

void Simulator::schedule_issue(int d, double t) {
  Pipeline& p = pipes_[d];
  if (p.issue_at >= 0 && p.issue_at <= t + kEps) return;
  p.issue_at = t;
  push(t, Ev::kIssue, d);
}

void Simulator::try_dispatch(double t) {
  if (!config_) return;
  const double overlap = config_->P * prof_.pipeline_efficiency;
  for (int d = 0; d < static_cast<int>(pipes_.size()); ++d) {
    Pipeline& p = pipes_[d];
    if (waiting_.empty()) return;
    if (t + kEps < p.ready_at) {
      schedule_issue(d, p.ready_at);
      continue;
    }
    while (static_cast<int>(p.batches.size()) < slots() && !waiting_.empty()) {
      if (t + kEps < p.next_issue) {
        schedule_issue(d, p.next_issue);
        break;
      }
      Batch b;
      while (static_cast<int>(b.reqs.size()) < config_->B && !waiting_.empty()) {
        const RequestId r = waiting_.begin()->second;
        waiting_.erase(waiting_.begin());
        b.reqs.push_back(r);
        b.s_in = std::max(b.s_in, records_[r].s_in);
        b.s_out = std::max(b.s_out, records_[r].s_out);
        records_[r].dispatch = t;
      }
      const int bid = next_batch_++;
      batches_[bid] = std::move(b);
      p.batches.push_back(bid);
      pipe_of_batch_[bid] = d;
      start_batch(bid, t);
      p.next_issue = t + (batches_.at(bid).end_time() - t) / overlap;
    }
  }
}

double Simulator::alpha(double t) const {
  if (cfg_.alpha_source == AlphaSource::kNominal) return cfg_.workload.rate;
  return estimate_arrival_rate(arrival_times_, t, cfg_.window).rate;
}

std::optional<ParallelConfig> Simulator::choose_config(int n_available, double t) {
  CandidateLimits lim;
  lim.max_gpus = cfg_.max_instances * G_;
  lim.batch_sizes = cfg_.batch_sizes;
  const bool spotserve = cfg_.policy == Policy::kSpotServe;
  if (spotserve && !cfg_.features.planner) lim.min_stage_gpus = prof_.min_gpus_without_memopt;
  const bool restricted =
      cfg_.policy == Policy::kRerouting || (spotserve && !cfg_.features.controller);
  if (restricted && fixed_shape_) lim.fixed_shape = fixed_shape_;
  const std::vector<ParallelConfig> cands = enumerate_candidates(prof_, lim);
  OptimizerOptions o;
  o.gpus_per_instance = G_;
  o.instance_cap = cfg_.ondemand_mixing ? cfg_.max_instances : n_available;
  o.s_in = cfg_.s_in;
  o.s_out = cfg_.s_out;
  return optimize_config(n_available, alpha(t), prof_, cands, o);
}

std::vector<std::string> Simulator::choose_instances(const ParallelConfig& next,
                                                     bool include_allocating) {
  const int k = instances_needed(next, G_);
  std::vector<std::string> out;
  auto ok = [&](const Inst& i) {
    return i.status == InstanceStatus::kActive ||
           (include_allocating && i.status == InstanceStatus::kAllocating);
  };
  for (const std::string& m : members_)
    if (static_cast<int>(out.size()) < k && ok(inst(m))) out.push_back(m);
  std::vector<const Inst*> rest;
  for (const Inst* i : ordered_instances())
    if (ok(*i) && std::find(out.begin(), out.end(), i->id) == out.end()) rest.push_back(i);
  std::stable_sort(rest.begin(), rest.end(), [](const Inst* a, const Inst* b) {
    return std::make_tuple(a->status != InstanceStatus::kActive, !a->warm) <
           std::make_tuple(b->status != InstanceStatus::kActive, !b->warm);
  });
  for (const Inst* i : rest)
    if (static_cast<int>(out.size()) < k) out.push_back(i->id);
  if (static_cast<int>(out.size()) < k) out.clear();
  return out;
}

// Frees idle instances for a negative delta; returns how many more should
// go once current members stop serving.
int free_idle(std::map<std::string, Inst>& insts, const std::vector<std::string>& keep,
              const std::vector<std::string>& members, int count, double t) {
  if (count <= 0) return 0;
  std::vector<const Inst*> idle;
  for (const auto& [id, i] : insts) {
    if (i.status != InstanceStatus::kActive && i.status != InstanceStatus::kAllocating) continue;
    if (std::find(keep.begin(), keep.end(), id) != keep.end()) continue;
    if (std::find(members.begin(), members.end(), id) != members.end()) continue;
    idle.push_back(&i);
  }
  std::sort(idle.begin(), idle.end(), [](const Inst* a, const Inst* b) { return a->order < b->order; });
  std::vector<ReleaseCandidate> cand;
  for (const Inst* i : idle) cand.push_back({i->id, i->kind});
  const std::vector<std::string> freed = choose_instances_to_free(cand, count);
  for (const std::string& id : freed) {
    insts.at(id).status = InstanceStatus::kReleased;
    insts.at(id).end = t;
  }
  return count - static_cast<int>(freed.size());
}

void Simulator::apply_delta(const ParallelConfig& next, int n_available, double t,
                            int* release_members) {
  const ControllerDecision dec = plan_instances(next, n_available, cfg_.pool_size, G_);
  if (dec.alloc && cfg_.ondemand_mixing) {
    for (int k = 0; k < dec.alloc->count; ++k)
      add_instance("od-" + std::to_string(ondemand_serial_++), InstanceKind::kOnDemand, t,
                   cfg_.grace.ready_in, false);
  }
  *release_members = dec.free ? dec.free->count : 0;
}

void Simulator::rebuild_pipelines(const ParallelConfig& next,
                                  const std::vector<std::string>& chosen,
                                  const DeviceMapping& mapping,
                                  const std::vector<std::string>& local) {
  layout_.clear();
  pipes_.assign(next.D, Pipeline{});
  pipe_of_batch_.clear();
  for (const auto& [gid, pos] : mapping.assignment) {
    const PhysGpu pg{local.at(gid.instance), gid.gpu};
    layout_[pg] = pos;
    pipes_[pos.d].gpus.push_back(pg);
  }
  config_ = next;
  members_ = chosen;
}

double Simulator::restart_stall(const ParallelConfig& next,
                                const std::vector<std::string>& who) const {
  const double baseline =
      prof_.model.total_param_bytes() / (next.P * next.M) / prof_.bandwidth;
  bool fresh = false;
  for (const std::string& id : who) fresh = fresh || !insts_.at(id).warm;
  return restart_cost(prof_, fresh ? RestartSource::kRemoteStorage : RestartSource::kLocalDisk,
                      baseline) +
         prof_.restart_load_time;
}

void Simulator::stop_serving(double t) {
  std::vector<int> all;
  for (const auto& [bid, b] : batches_) all.push_back(bid);
  for (int bid : all) {
    stop_batch(bid, t);
    requeue_batch(bid);
  }
  pipes_.clear();
  pipe_of_batch_.clear();
  layout_.clear();
  config_.reset();
  members_.clear();
}

void Simulator::bootstrap(double t) {
  const int n = count_available(true);
  const std::optional<ParallelConfig> next = choose_config(n, t);
  if (!next) return;
  if (!fixed_shape_) fixed_shape_ = cfg_.reroute_shape.value_or(std::make_pair(next->P, next->M));
  int excess = 0;
  apply_delta(*next, n, t, &excess);
  const std::vector<std::string> chosen = choose_instances(*next, true);
  if (chosen.empty()) return;
  free_idle(insts_, chosen, {}, excess, t);
  std::vector<InstanceGpus> ig;
  for (int k = 0; k < static_cast<int>(chosen.size()); ++k)
    ig.push_back({k, std::vector<ContextInventory>(G_)});
  rebuild_pipelines(*next, chosen, naive_mapping(ig, *next), chosen);
  for (const std::string& id : chosen) insts_.at(id).warm = true;
  report_.reconfigurations.push_back({t, *next, 0.0, "initial"});
}

Prepared Simulator::prepare(double t, const ParallelConfig& next,
                            const std::vector<std::string>& chosen) {
  Prepared pr;
  pr.local = chosen;
  for (const std::string& m : members_)
    if (alive(m) && std::find(chosen.begin(), chosen.end(), m) == chosen.end())
      pr.local.push_back(m);
  std::map<std::string, int> index;
  for (int k = 0; k < static_cast<int>(pr.local.size()); ++k) index[pr.local[k]] = k;

  // Cache that still exists: decoded past the initial phase on an intact pipeline.
  std::vector<int> candidates;
  std::map<int, std::vector<CachedRequest>> old_cached;  // old pipeline -> requests
  std::vector<RequestProgress> progress;
  for (int d = 0; d < static_cast<int>(pipes_.size()); ++d) {
    const bool intact = !pipeline_broken(pipes_[d]);
    for (int bid : pipes_[d].batches) {
      const Batch& b = batches_.at(bid);
      const int k = b.tokens_at(t);
      if (!intact || k == 0) {
        pr.dropped_batches.push_back(bid);
        continue;
      }
      candidates.push_back(bid);
      for (RequestId r : b.reqs) {
        old_cached[d].push_back({r, b.s_in + k});
        progress.push_back({r, k});
      }
    }
  }
  const int new_slots =
      std::max(1, static_cast<int>(std::ceil(next.P * prof_.pipeline_efficiency - kEps)));
  const std::vector<RequestId> kept = retain_cache(progress, next.D * next.B * new_slots);
  const std::set<RequestId> kept_set(kept.begin(), kept.end());

  std::map<int, std::vector<RequestId>> kept_reqs;
  std::vector<int> usable_batches;
  for (int bid : candidates) {
    std::vector<RequestId> keep;
    for (RequestId r : batches_.at(bid).reqs) {
      if (kept_set.count(r) && static_cast<int>(keep.size()) < next.B) keep.push_back(r);
      else pr.dropped_requests.push_back(r);
    }
    if (keep.empty()) {
      pr.dropped_batches.push_back(bid);
      continue;
    }
    kept_reqs[bid] = std::move(keep);
    usable_batches.push_back(bid);
  }

  pr.batches_for.assign(next.D, {});
  std::vector<int> unplaced;
  for (int bid : usable_batches) {
    const int d = pipe_of_batch_.at(bid);
    if (d < next.D && static_cast<int>(pr.batches_for[d].size()) < new_slots)
      pr.batches_for[d].push_back(bid);
    else
      unplaced.push_back(bid);
  }
  for (int bid : unplaced) {
    bool placed = false;
    for (int d = 0; d < next.D && !placed; ++d) {
      if (static_cast<int>(pr.batches_for[d].size()) < new_slots) {
        pr.batches_for[d].push_back(bid);
        placed = true;
      }
    }
    if (!placed) {
      pr.dropped_batches.push_back(bid);
      kept_reqs.erase(bid);
    }
  }

  PipelineRequests inherited(next.D);
  for (int d = 0; d < next.D; ++d) {
    for (int bid : pr.batches_for[d]) {
      const Batch& b = batches_.at(bid);
      const int k = b.tokens_at(t);
      for (RequestId r : kept_reqs.at(bid)) inherited[d].push_back({r, b.s_in + k});
    }
  }
  std::vector<std::vector<ContextInventory>> inv(pr.local.size(),
                                                 std::vector<ContextInventory>(G_));
  if (config_) {
    for (const auto& [pg, pos] : layout_) {
      auto it = index.find(pg.inst);
      if (it == index.end() || pg.gpu >= G_) continue;
      inv[it->second][pg.gpu] = required_context_with_cache(*config_, pos, prof_.model,
                                                            old_cached[pos.d]);
    }
  }
  std::vector<InstanceGpus> ig;
  std::vector<GpuNode> nodes;
  for (int k = 0; k < static_cast<int>(pr.local.size()); ++k) {
    if (k < static_cast<int>(chosen.size())) ig.push_back({k, inv[k]});
    for (int g = 0; g < G_; ++g) nodes.push_back({GpuId{k, g}, inv[k][g]});
  }
  if (cfg_.features.mapper) {
    try {
      pr.mapping = map_devices(ig, next, prof_.model, G_, inherited, cfg_.fused_weight);
    } catch (const FusingError&) {
      std::vector<GpuNode> flat(nodes.begin(), nodes.begin() + chosen.size() * G_);
      pr.mapping = km_device_mapping(flat, next, prof_.model, inherited);
    }
  } else {
    pr.mapping = naive_mapping(ig, next);
  }
  PlannerOptions po;
  po.u_max = cfg_.u_max;
  po.num_instances = static_cast<int>(pr.local.size());
  po.memory_optimized = cfg_.features.planner;
  pr.plan = plan_migration(pr.mapping, nodes, prof_.model, inherited, po);
  pr.cost = migration_cost(pr.plan, prof_,
                           decode_step_time(prof_, next.P, next.M, next.B) / next.P);

  pr.kept_reqs = std::move(kept_reqs);
  return pr;
}

void Simulator::decide_spotserve(double t) {
  pending_.reset();
  for (auto& [bid, b] : batches_) b.stop_at = INT_MAX;
  const int n = count_available(true);
  const std::optional<ParallelConfig> next = choose_config(n, t);
  if (!next) {
    stop_serving(t);
    return;
  }
  int excess = 0;
  apply_delta(*next, n, t, &excess);
  const std::vector<std::string> chosen = choose_instances(*next, true);
  if (chosen.empty()) {
    stop_serving(t);
    return;
  }
  excess = free_idle(insts_, chosen, members_, excess, t);
  std::vector<std::string> sorted_chosen = chosen;
  std::sort(sorted_chosen.begin(), sorted_chosen.end());
  const bool changed = sorted_chosen != member_set();
  if (!should_reconfigure(config_, *next, changed)) return;

  const std::size_t log_index = report_.reconfigurations.size();
  report_.reconfigurations.push_back({t, *next, 0.0, reason_});

  bool acquisition = false;
  double ready = t;
  for (const std::string& id : chosen) {
    const Inst& i = insts_.at(id);
    if (i.status == InstanceStatus::kAllocating) {
      acquisition = true;
      ready = std::max(ready, i.ready_at);
    }
  }
  std::optional<double> deadline;
  auto note_deadline = [&](const std::string& id) {
    const Inst& i = insts_.at(id);
    if (i.status == InstanceStatus::kGracePreempting)
      deadline = deadline ? std::min(*deadline, i.deadline) : i.deadline;
  };
  for (const std::string& id : members_) note_deadline(id);

  const Prepared estimate = prepare(t, *next, chosen);
  const double t_mig = estimate.cost.total;
  double commit_t = t;
  GraceKind kind = GraceKind::kPreemption;
  if (acquisition) {
    kind = GraceKind::kAcquisition;
    commit_t = ready;
    if (cfg_.features.arranger) {
      for (auto& [bid, b] : batches_) {
        if (!b.running) continue;
        const int k0 = b.tokens_at(t);
        GraceContext ctx{GraceKind::kAcquisition, ready - t, t_mig, b.s_out - k0,
                         [&b, t](int S) { return b.latency_from(t, S); }};
        const Arrangement a = arrange_acquisition(ctx);
        if (a.S_t < ctx.s_remaining) {
          b.stop_at = k0 + a.S_t;
          commit_t = std::max(commit_t, t + b.latency_from(t, a.S_t));
        }
      }
    }
  } else if (deadline && cfg_.features.arranger) {
    commit_t = std::max(t, *deadline - t_mig);
    std::vector<int> reroute;
    for (auto& [bid, b] : batches_) {
      if (!b.running) continue;
      const int k0 = b.tokens_at(t);
      GraceContext ctx{GraceKind::kPreemption, *deadline - t, t_mig, b.s_out - k0,
                       [&b, t](int S) { return b.latency_from(t, S); }};
      const Arrangement a = arrange_preemption(ctx);
      if (a.action == AfterAction::kRerouteWithoutCache && k0 + a.S_t < b.s_out) {
        reroute.push_back(bid);
      } else if (a.S_t < ctx.s_remaining) {
        b.stop_at = k0 + a.S_t;
      }
    }
    for (int bid : reroute) {
      stop_batch(bid, t);
      requeue_batch(bid);
    }
  }

  std::vector<PendingMigration> windows;
  std::map<std::string, int> ids;
  auto id_of = [&](const std::string& s) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    const int v = static_cast<int>(ids.size());
    ids[s] = v;
    return v;
  };
  for (const Window& w : windows_) {
    if (w.end <= t) continue;
    PendingMigration pm{GraceKind::kPreemption, w.start, w.end - w.start, {}};
    for (const std::string& s : w.instances) pm.instances.push_back(id_of(s));
    windows.push_back(std::move(pm));
  }
  PendingMigration mine{kind, commit_t, t_mig, {}};
  for (const std::string& s : estimate.local) mine.instances.push_back(id_of(s));
  windows.push_back(std::move(mine));
  // Earlier windows keep their place; only the new one may move.
  for (std::size_t i = 0; i + 1 < windows.size(); ++i) windows[i].kind = GraceKind::kPreemption;
  if (kind == GraceKind::kPreemption) windows.back().kind = GraceKind::kAcquisition;
  commit_t = resolve_conflicts(windows).back().start;

  pending_ = PendingCommit{++gen_, *next, chosen, log_index, excess, kind, t_mig};
  push(commit_t, Ev::kCommit, 0, gen_);
}

void Simulator::commit(double t, std::uint64_t gen) {
  if (!pending_ || pending_->gen != gen) return;
  const PendingCommit pc = *pending_;
  pending_.reset();
  for (const std::string& id : pc.chosen) {
    if (!alive(id) || insts_.at(id).status != InstanceStatus::kActive) {
      request_decide(t);
      return;
    }
  }
  std::vector<int> ids;
  for (const auto& [bid, b] : batches_) ids.push_back(bid);
  for (int bid : ids) {
    Batch& b = batches_.at(bid);
    if (b.running && b.stop_at >= b.s_out && b.end_time() <= t + kEps) {
      complete_batch(bid, t);
      continue;
    }
    stop_batch(bid, t);
  }
  if (!cfg_.features.arranger) {
    for (Pipeline& p : pipes_) {
      bool affected = false;
      for (const PhysGpu& g : p.gpus)
        affected = affected || insts_.at(g.inst).status == InstanceStatus::kGracePreempting;
      if (!affected) continue;
      const std::vector<int> lost = p.batches;
      for (int bid : lost) requeue_batch(bid);
    }
  }

  Prepared pr = prepare(t, pc.next, pc.chosen);
  for (int bid : pr.dropped_batches)
    if (batches_.count(bid)) requeue_batch(bid);
  for (auto& [bid, reqs] : pr.kept_reqs) {
    Batch& b = batches_.at(bid);
    for (RequestId r : b.reqs)
      if (std::find(reqs.begin(), reqs.end(), r) == reqs.end()) requeue_request(r);
    b.reqs = reqs;
  }

  double stall = cfg_.features.planner ? pr.cost.progressive_stall : pr.cost.total;
  if (!pr.plan.storage_fetches.empty()) stall += restart_stall(pc.next, pc.chosen);

  const std::vector<std::string> old_members = members_;
  rebuild_pipelines(pc.next, pc.chosen, pr.mapping, pr.local);
  for (int d = 0; d < pc.next.D; ++d) {
    pipes_[d].batches = pr.batches_for[d];
    for (int bid : pr.batches_for[d]) pipe_of_batch_[bid] = d;
    pipes_[d].ready_at = t + stall;
    pipes_[d].next_issue = t + stall;
  }
  int excess = pc.release_members;
  for (const std::string& id : old_members) {
    if (excess <= 0) break;
    if (std::find(pc.chosen.begin(), pc.chosen.end(), id) != pc.chosen.end()) continue;
    if (insts_.at(id).status != InstanceStatus::kActive) continue;
    release(id, t);
    --excess;
  }
  for (const std::string& id : pc.chosen) insts_.at(id).warm = true;
  windows_.push_back({t, t + std::max(stall, pr.cost.total), pr.local});
  report_.reconfigurations[pc.log_index].t_mig = stall;
  push(t + stall, Ev::kResume, 0, ++resume_gen_);
}

void Simulator::resume(double t, std::uint64_t gen) {
  if (gen != resume_gen_ || !config_) return;
  for (Pipeline& p : pipes_)
    for (int bid : p.batches)
      if (!batches_.at(bid).running) start_batch(bid, t);
  try_dispatch(t);
}

void Simulator::decide_reparallelization(double t) {
  const int n = count_available(false);
  const std::optional<ParallelConfig> next = choose_config(n, t);
  if (!next) {
    stop_serving(t);
    return;
  }
  int excess = 0;
  apply_delta(*next, n, t, &excess);
  const std::vector<std::string> chosen = choose_instances(*next, false);
  if (chosen.empty()) {
    stop_serving(t);
    return;
  }
  excess = free_idle(insts_, chosen, members_, excess, t);
  std::vector<std::string> sorted_chosen = chosen;
  std::sort(sorted_chosen.begin(), sorted_chosen.end());
  bool broken = false;
  for (const Pipeline& p : pipes_) broken = broken || pipeline_broken(p);
  if (!should_reconfigure(config_, *next, broken || sorted_chosen != member_set())) return;

  std::vector<int> ids;
  for (const auto& [bid, b] : batches_) ids.push_back(bid);
  for (int bid : ids) {
    stop_batch(bid, t);
    requeue_batch(bid);
  }
  const double stall = restart_stall(*next, chosen);
  std::vector<InstanceGpus> ig;
  for (int k = 0; k < static_cast<int>(chosen.size()); ++k)
    ig.push_back({k, std::vector<ContextInventory>(G_)});
  const std::vector<std::string> old_members = members_;
  rebuild_pipelines(*next, chosen, naive_mapping(ig, *next), chosen);
  for (Pipeline& p : pipes_) p.ready_at = p.next_issue = t + stall;
  for (const std::string& id : old_members) {
    if (excess <= 0) break;
    if (std::find(chosen.begin(), chosen.end(), id) != chosen.end()) continue;
    if (!alive(id) || insts_.at(id).status != InstanceStatus::kActive) continue;
    release(id, t);
    --excess;
  }
  for (const std::string& id : chosen) insts_.at(id).warm = true;
  report_.reconfigurations.push_back({t, *next, stall, reason_});
}

void Simulator::decide_rerouting(double t) {
  const int n = count_available(false);
  const std::optional<ParallelConfig> next = choose_config(n, t);
  const std::optional<ParallelConfig> before = config_;
  const std::vector<std::string> before_members = member_set();

  std::vector<Pipeline> kept;
  for (Pipeline& p : pipes_) {
    if (pipeline_broken(p) || !next) {
      for (int bid : std::vector<int>(p.batches)) {
        stop_batch(bid, t);
        requeue_batch(bid);
      }
    } else {
      kept.push_back(std::move(p));
    }
  }
  if (!next) {
    pipes_.clear();
    pipe_of_batch_.clear();
    layout_.clear();
    config_.reset();
    members_.clear();
    return;
  }
  while (static_cast<int>(kept.size()) > next->D) {
    for (int bid : kept.back().batches) {
      stop_batch(bid, t);
      for (RequestId r : batches_.at(bid).reqs) requeue_request(r);
      batches_.erase(bid);
      pipe_of_batch_.erase(bid);
    }
    kept.pop_back();
  }

  std::set<PhysGpu> used;
  for (const Pipeline& p : kept)
    for (const PhysGpu& g : p.gpus) used.insert(g);
  std::vector<const Inst*> pool;
  for (const Inst* i : ordered_instances())
    if (i->status == InstanceStatus::kActive) pool.push_back(i);
  std::stable_sort(pool.begin(), pool.end(), [this](const Inst* a, const Inst* b) {
    const bool ma = std::find(members_.begin(), members_.end(), a->id) != members_.end();
    const bool mb = std::find(members_.begin(), members_.end(), b->id) != members_.end();
    return std::make_tuple(!ma, !a->warm) < std::make_tuple(!mb, !b->warm);
  });
  std::vector<PhysGpu> free_gpus;
  for (const Inst* i : pool)
    for (int g = 0; g < G_; ++g)
      if (!used.count(PhysGpu{i->id, g})) free_gpus.push_back(PhysGpu{i->id, g});

  const int per = next->P * next->M;
  std::size_t cursor = 0;
  while (static_cast<int>(kept.size()) < next->D &&
         cursor + per <= free_gpus.size()) {
    Pipeline p;
    std::vector<std::string> who;
    for (int k = 0; k < per; ++k) {
      p.gpus.push_back(free_gpus[cursor + k]);
      if (std::find(who.begin(), who.end(), free_gpus[cursor + k].inst) == who.end())
        who.push_back(free_gpus[cursor + k].inst);
    }
    cursor += per;
    const double stall = before ? restart_stall(*next, who) : 0.0;
    p.ready_at = p.next_issue = t + stall;
    for (const std::string& id : who) insts_.at(id).warm = true;
    kept.push_back(std::move(p));
  }

  ParallelConfig actual = *next;
  actual.D = static_cast<int>(kept.size());
  pipes_ = std::move(kept);
  pipe_of_batch_.clear();
  layout_.clear();
  members_.clear();
  for (int d = 0; d < static_cast<int>(pipes_.size()); ++d) {
    for (int bid : pipes_[d].batches) pipe_of_batch_[bid] = d;
    for (int k = 0; k < static_cast<int>(pipes_[d].gpus.size()); ++k) {
      const PhysGpu& g = pipes_[d].gpus[k];
      layout_[g] = position_at(actual, d * per + k);
      if (std::find(members_.begin(), members_.end(), g.inst) == members_.end())
        members_.push_back(g.inst);
    }
  }
  if (actual.D == 0) {
    config_.reset();
    return;
  }
  config_ = actual;
  // Idle instances are kept: a later rebuild draws its pipelines from them.
  double stall = 0.0;
  for (const Pipeline& p : pipes_) stall = std::max(stall, p.ready_at - t);
  if (before != config_ || before_members != member_set())
    report_.reconfigurations.push_back({t, actual, stall, reason_});
}

void Simulator::on_trace(const TraceEvent& e, double t) {
  if (e.kind == TraceKind::kPreempt) {
    Inst& i = inst(e.id);
    if (i.status == InstanceStatus::kReleased || i.status == InstanceStatus::kGracePreempting)
      return;
    i.status = InstanceStatus::kGracePreempting;
    i.deadline = t + e.grace;
    push(i.deadline, Ev::kDeadline, 0, 0, e.id);
    reason_ = "preempt";
  } else {
    add_instance(e.id, e.itype, t, e.ready_in, false);
    reason_ = "acquire";
  }
  if (cfg_.policy == Policy::kSpotServe) request_decide(t);
}

void Simulator::on_deadline(const std::string& id, double t) {
  if (!alive(id)) return;
  bool serving = std::find(members_.begin(), members_.end(), id) != members_.end();
  release(id, t);
  reason_ = "preempt";
  if (cfg_.policy != Policy::kSpotServe || serving) {
    if (cfg_.policy == Policy::kSpotServe) pending_.reset();
    request_decide(t);
  }
}

void Simulator::on_ready(const std::string& id, double t) {
  Inst& i = inst(id);
  if (i.status == InstanceStatus::kAllocating) i.status = InstanceStatus::kActive;
  if (i.status == InstanceStatus::kReleased) return;
  reason_ = "acquire";
  if (cfg_.policy != Policy::kSpotServe) request_decide(t);
}

MetricsReport Simulator::run() {
  for (std::size_t k = 0; k < arrivals_.size(); ++k) {
    const Arrival& a = arrivals_[k];
    if (a.t >= cfg_.duration) continue;
    RequestRecord r;
    r.id = static_cast<RequestId>(records_.size());
    r.arrival = a.t;
    r.s_in = a.s_in;
    r.s_out = a.s_out;
    records_.push_back(r);
    push(a.t, Ev::kArrival, static_cast<int>(r.id));
  }
  for (std::size_t k = 0; k < trace_.size(); ++k)
    if (trace_[k].t < cfg_.duration) push(trace_[k].t, Ev::kTrace, static_cast<int>(k));
  for (int k = 0; k < cfg_.initial_instances; ++k)
    add_instance("i-" + std::to_string(k), InstanceKind::kSpot, 0.0, 0.0, true);
  bootstrap(0.0);

  const double end = cfg_.duration + cfg_.drain_limit;
  while (!queue_.empty()) {
    const Event e = queue_.top();
    queue_.pop();
    if (e.t > end) break;
    const double t = e.t;
    switch (e.type) {
      case Ev::kTrace: on_trace(trace_[e.a], t); break;
      case Ev::kDeadline: on_deadline(e.id, t); break;
      case Ev::kReady: on_ready(e.id, t); break;
      case Ev::kDecide:
        decide_at_.reset();
        if (!config_ && report_.reconfigurations.empty()) {
          bootstrap(t);
        } else if (cfg_.policy == Policy::kSpotServe) {
          decide_spotserve(t);
        } else if (cfg_.policy == Policy::kRerouting) {
          decide_rerouting(t);
        } else {
          decide_reparallelization(t);
        }
        try_dispatch(t);
        break;
      case Ev::kCommit: commit(t, e.b); break;
      case Ev::kResume: resume(t, e.b); break;
      case Ev::kArrival:
        arrival_times_.push_back(t);
        waiting_.insert({t, e.a});
        try_dispatch(t);
        break;
      case Ev::kIssue:
        if (e.a < static_cast<int>(pipes_.size()) && std::abs(pipes_[e.a].issue_at - t) < kEps)
          pipes_[e.a].issue_at = -1.0;
        try_dispatch(t);
        break;
      case Ev::kDone: {
        auto it = batches_.find(e.a);
        if (it == batches_.end() || it->second.run != e.b || !it->second.running) break;
        if (it->second.stop_at < it->second.s_out) break;
        complete_batch(e.a, t);
        try_dispatch(t);
        break;
      }
    }
  }
  finish();
  return report_;
}

void Simulator::finish() {
  report_.requests = records_;
  for (const Inst* i : ordered_instances()) {
    if (i->start >= cfg_.duration) continue;
    const double stop =
        i->status == InstanceStatus::kReleased ? std::min(i->end, cfg_.duration) : cfg_.duration;
    if (stop > i->start) report_.usage.push_back({i->id, i->kind, i->start, stop});
  }
  finalize_report(report_, prof_.prices);
}

}  // namespace

MetricsReport simulate(const SimInputs& inputs) {
  Simulator sim(inputs);
  return sim.run();
}

}  // namespace spotsim
