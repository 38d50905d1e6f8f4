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
#include "spotsim/sim_config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "spotsim/errors.hpp"

namespace spotsim {

namespace fs = std::filesystem;

std::string to_string(Policy p) {
  switch (p) {
    case Policy::kSpotServe: return "spotserve";
    case Policy::kRerouting: return "rerouting";
    case Policy::kReparallelization: return "reparallelization";
  }
  return "unknown";
}

Policy policy_from_string(const std::string& s) {
  if (s == "spotserve") return Policy::kSpotServe;
  if (s == "rerouting") return Policy::kRerouting;
  if (s == "reparallelization") return Policy::kReparallelization;
  throw ConfigError("unknown policy '" + s + "'");
}

namespace {

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute() || base.empty()) return path.lexically_normal().string();
  return (fs::path(base) / path).lexically_normal().string();
}

const char* fused_name(FusedWeightRule r) { return r == FusedWeightRule::kMax ? "max" : "sum"; }

}  // namespace

SimConfig config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  SimConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    c.profile_path = resolve(j.at("profile").get<std::string>(), base_dir);
    c.trace_path = resolve(j.value("trace", std::string()), base_dir);

    const nlohmann::json& w = j.at("workload");
    const std::string type = w.at("type").get<std::string>();
    if (type == "fixed_rate") {
      if (w.contains("path")) throw ConfigError("fixed_rate workload takes no path");
      c.workload.type = WorkloadConfig::Type::kFixedRate;
      c.workload.rate = w.at("rate").get<double>();
      c.workload.cv = w.value("cv", 6.0);
      c.workload.seed = w.value("seed", std::uint64_t{1});
      if (!(c.workload.rate > 0) || !(c.workload.cv > 0))
        throw ConfigError("workload rate and cv must be positive");
    } else if (type == "arrival_file") {
      if (w.contains("rate")) throw ConfigError("arrival_file workload takes no rate");
      c.workload.type = WorkloadConfig::Type::kArrivalFile;
      c.workload.arrival_path = resolve(w.at("path").get<std::string>(), base_dir);
    } else {
      throw ConfigError("unknown workload type '" + type + "'");
    }

    c.policy = policy_from_string(j.value("policy", std::string("spotserve")));
    c.duration = j.value("duration", c.duration);
    c.pool_size = j.value("pool_size", c.pool_size);
    if (j.contains("u_max") && !j["u_max"].is_null()) c.u_max = j["u_max"].get<double>();
    if (j.contains("candidates")) {
      const nlohmann::json& k = j["candidates"];
      c.max_instances = k.value("max_instances", c.max_instances);
      c.batch_sizes = k.value("batch_sizes", c.batch_sizes);
    }
    c.s_in = j.value("s_in", c.s_in);
    c.s_out = j.value("s_out", c.s_out);
    const std::string alpha =
        j.value("alpha_source", std::string(c.workload.type == WorkloadConfig::Type::kFixedRate
                                                ? "nominal"
                                                : "window"));
    if (alpha == "nominal") {
      if (c.workload.type != WorkloadConfig::Type::kFixedRate)
        throw ConfigError("alpha_source nominal needs a fixed_rate workload");
      c.alpha_source = AlphaSource::kNominal;
    } else if (alpha == "window") {
      c.alpha_source = AlphaSource::kWindow;
    } else {
      throw ConfigError("unknown alpha_source '" + alpha + "'");
    }
    c.window = j.value("window", c.window);
    if (j.contains("grace")) {
      c.grace.grace = j["grace"].value("preemption", c.grace.grace);
      c.grace.ready_in = j["grace"].value("acquisition", c.grace.ready_in);
    }
    c.ondemand_mixing = j.value("ondemand_mixing", false);
    if (j.contains("instance_kind_override") && !j["instance_kind_override"].is_null())
      c.instance_kind_override =
          instance_kind_from_string(j["instance_kind_override"].get<std::string>());
    if (j.contains("features")) {
      const nlohmann::json& f = j["features"];
      c.features.controller = f.value("controller", true);
      c.features.planner = f.value("planner", true);
      c.features.arranger = f.value("arranger", true);
      c.features.mapper = f.value("mapper", true);
    }
    const std::string fused = j.value("fused_weight", std::string("max"));
    if (fused == "max") c.fused_weight = FusedWeightRule::kMax;
    else if (fused == "sum") c.fused_weight = FusedWeightRule::kSum;
    else throw ConfigError("fused_weight must be max or sum");
    c.initial_instances = j.value("initial_instances", 0);
    if (j.contains("reroute_shape") && !j["reroute_shape"].is_null()) {
      const auto pm = j["reroute_shape"].get<std::vector<int>>();
      if (pm.size() != 2 || pm[0] < 1 || pm[1] < 1)
        throw ConfigError("reroute_shape must be [P, M]");
      c.reroute_shape = std::make_pair(pm[0], pm[1]);
    }
    c.drain_limit = j.value("drain_limit", c.drain_limit);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(c.duration > 0)) throw ConfigError("duration must be positive");
  if (c.pool_size < 0 || c.initial_instances < 0 || c.max_instances < 1)
    throw ConfigError("instance counts out of range");
  if (c.s_in < 0 || c.s_out < 1) throw ConfigError("s_in/s_out out of range");
  if (!(c.window > 0)) throw ConfigError("window must be positive");
  if (c.batch_sizes.empty()) throw ConfigError("candidates.batch_sizes is empty");
  return c;
}

nlohmann::json config_to_json(const SimConfig& c) {
  nlohmann::json w;
  if (c.workload.type == WorkloadConfig::Type::kFixedRate)
    w = {{"type", "fixed_rate"}, {"rate", c.workload.rate}, {"cv", c.workload.cv},
         {"seed", c.workload.seed}};
  else
    w = {{"type", "arrival_file"}, {"path", c.workload.arrival_path}};
  nlohmann::json j = {
      {"profile", c.profile_path},
      {"trace", c.trace_path},
      {"workload", w},
      {"policy", to_string(c.policy)},
      {"duration", c.duration},
      {"pool_size", c.pool_size},
      {"u_max", std::isfinite(c.u_max) ? nlohmann::json(c.u_max) : nlohmann::json(nullptr)},
      {"candidates", {{"max_instances", c.max_instances}, {"batch_sizes", c.batch_sizes}}},
      {"s_in", c.s_in},
      {"s_out", c.s_out},
      {"alpha_source", c.alpha_source == AlphaSource::kNominal ? "nominal" : "window"},
      {"window", c.window},
      {"grace", {{"preemption", c.grace.grace}, {"acquisition", c.grace.ready_in}}},
      {"ondemand_mixing", c.ondemand_mixing},
      {"instance_kind_override", c.instance_kind_override
                                     ? nlohmann::json(to_string(*c.instance_kind_override))
                                     : nlohmann::json(nullptr)},
      {"features",
       {{"controller", c.features.controller},
        {"planner", c.features.planner},
        {"arranger", c.features.arranger},
        {"mapper", c.features.mapper}}},
      {"fused_weight", fused_name(c.fused_weight)},
      {"initial_instances", c.initial_instances},
      {"reroute_shape", c.reroute_shape
                            ? nlohmann::json({c.reroute_shape->first, c.reroute_shape->second})
                            : nlohmann::json(nullptr)},
      {"drain_limit", c.drain_limit}};
  return j;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

}  // namespace spotsim
