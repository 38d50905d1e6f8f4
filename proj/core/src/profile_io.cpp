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
#include "spotsim/profile_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "spotsim/errors.hpp"

namespace spotsim {

namespace {

ExecKey parse_key(const std::string& key) {
  ExecKey k;
  char c1 = 0, c2 = 0;
  std::istringstream in(key);
  if (!(in >> k.P >> c1 >> k.M >> c2 >> k.B) || c1 != ',' || c2 != ',' || !in.eof())
    throw ConfigError("bad exec key '" + key + "', expected \"P,M,B\"");
  return k;
}

}  // namespace

PerfProfile profile_from_json(const nlohmann::json& j) {
  try {
    PerfProfile p;
    const auto& m = j.at("model");
    p.model.name = m.at("name").get<std::string>();
    p.model.num_layers = m.at("num_layers").get<int>();
    p.model.bytes_per_layer = m.at("bytes_per_layer").get<double>();
    p.model.kv_bytes_per_token_per_layer = m.at("kv_bytes_per_token_per_layer").get<double>();
    if (m.contains("total_param_bytes")) {
      const double total = m.at("total_param_bytes").get<double>();
      if (std::abs(total - p.model.total_param_bytes()) > 1e-6 * total)
        throw ConfigError("model.total_param_bytes != num_layers * bytes_per_layer");
    }
    p.gpus_per_instance = j.value("gpus_per_instance", 1);
    p.init_reference_s_in = j.value("init_reference_s_in", 512);
    p.pipeline_efficiency = j.at("pipeline_efficiency").get<double>();
    p.bandwidth = j.at("bandwidth").get<double>();
    p.transfer_latency = j.value("transfer_latency", 0.0);
    p.restart_load_time = j.value("restart_load_time", 0.0);
    if (j.contains("restart_ratios")) {
      p.local_restart_ratio = j["restart_ratios"].value("local_disk", 1.45);
      p.remote_restart_ratio = j["restart_ratios"].value("remote_storage", 9.54);
    }
    p.allow_nearest = j.value("allow_nearest", false);
    p.min_gpus_without_memopt = j.value("min_gpus_without_memopt", 0);
    if (j.contains("prices")) {
      p.prices.spot_price = j["prices"].value("spot", 1.9);
      p.prices.ondemand_price = j["prices"].value("ondemand", 3.9);
    }
    for (const auto& [key, e] : j.at("exec").items())
      p.exec[parse_key(key)] = ExecEntry{e.at("t_init").get<double>(), e.at("t_dec").get<double>()};
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }
}

nlohmann::json profile_to_json(const PerfProfile& p) {
  nlohmann::json j;
  j["model"] = {{"name", p.model.name},
                {"num_layers", p.model.num_layers},
                {"bytes_per_layer", p.model.bytes_per_layer},
                {"kv_bytes_per_token_per_layer", p.model.kv_bytes_per_token_per_layer}};
  j["gpus_per_instance"] = p.gpus_per_instance;
  j["init_reference_s_in"] = p.init_reference_s_in;
  j["pipeline_efficiency"] = p.pipeline_efficiency;
  j["bandwidth"] = p.bandwidth;
  j["transfer_latency"] = p.transfer_latency;
  j["restart_load_time"] = p.restart_load_time;
  j["restart_ratios"] = {{"local_disk", p.local_restart_ratio},
                         {"remote_storage", p.remote_restart_ratio}};
  j["allow_nearest"] = p.allow_nearest;
  j["min_gpus_without_memopt"] = p.min_gpus_without_memopt;
  j["prices"] = {{"spot", p.prices.spot_price}, {"ondemand", p.prices.ondemand_price}};
  nlohmann::json exec = nlohmann::json::object();
  for (const auto& [k, e] : p.exec)
    exec[std::to_string(k.P) + "," + std::to_string(k.M) + "," + std::to_string(k.B)] = {
        {"t_init", e.t_init}, {"t_dec", e.t_dec}};
  j["exec"] = exec;
  return j;
}

PerfProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("profile " + path.string() + ": " + e.what());
  }
  return profile_from_json(j);
}

}  // namespace spotsim
