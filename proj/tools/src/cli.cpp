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
#include "spotsim/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "spotsim/errors.hpp"
#include "spotsim/simulator.hpp"

#ifndef SPOTSIM_VERSION
#define SPOTSIM_VERSION "0.0.0"
#endif
#ifndef SPOTSIM_GIT_DESCRIBE
#define SPOTSIM_GIT_DESCRIBE "unknown"
#endif

namespace spotsim::cli {

namespace fs = std::filesystem;

SimConfig apply_overrides(SimConfig c, const Overrides& o) {
  if (o.rate) {
    if (c.workload.type != WorkloadConfig::Type::kFixedRate)
      throw ConfigError("--rate needs a fixed_rate workload");
    if (!(*o.rate > 0)) throw ConfigError("--rate must be positive");
    c.workload.rate = *o.rate;
  }
  if (o.seed) {
    if (c.workload.type != WorkloadConfig::Type::kFixedRate)
      throw ConfigError("--seed needs a fixed_rate workload");
    c.workload.seed = *o.seed;
  }
  if (o.trace) c.trace_path = *o.trace;
  if (o.profile) c.profile_path = *o.profile;
  return c;
}

std::vector<Policy> parse_policies(const std::string& list) {
  std::vector<Policy> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(policy_from_string(item));
  if (out.empty()) throw ConfigError("empty policy list");
  return out;
}

std::vector<std::pair<std::string, SimConfig>> ablation_variants(const SimConfig& base) {
  std::vector<std::pair<std::string, SimConfig>> out;
  SimConfig c = base;
  c.policy = Policy::kSpotServe;
  c.features = FeatureFlags{};
  out.emplace_back("full", c);
  c.features.controller = false;
  out.emplace_back("-controller", c);
  c.features.planner = false;
  out.emplace_back("-planner", c);
  c.features.arranger = false;
  out.emplace_back("-arranger", c);
  c.features.mapper = false;
  out.emplace_back("-mapper", c);
  return out;
}

void write_metric_rows(std::ostream& out, const std::string& prefix, const MetricsReport& r) {
  const std::pair<const char*, double> rows[] = {
      {"avg_latency", r.avg_latency},
      {"p50", r.p50},
      {"p90", r.p90},
      {"p99", r.p99},
      {"max_latency", r.max_latency},
      {"arrived", static_cast<double>(r.arrived)},
      {"completed", static_cast<double>(r.completed)},
      {"outstanding_at_horizon", static_cast<double>(r.outstanding_at_horizon)},
      {"tokens_served", r.tokens_served},
      {"cost_usd", r.cost.total_usd},
      {"cost_per_token_usd", r.cost.per_token_usd},
      {"reconfigurations", static_cast<double>(r.reconfigurations.size())},
  };
  out << std::setprecision(10);
  for (const auto& [name, value] : rows) out << prefix << name << ',' << value << '\n';
}

nlohmann::json manifest_json(const std::string& command,
                             const std::vector<std::pair<std::string, SimConfig>>& runs,
                             const std::vector<std::string>& outputs) {
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& [label, c] : runs) {
    nlohmann::json e = {{"label", label}, {"config", config_to_json(c)}};
    if (c.workload.type == WorkloadConfig::Type::kFixedRate) e["seed"] = c.workload.seed;
    jr.push_back(std::move(e));
  }
  return {{"command", command},
          {"version", SPOTSIM_VERSION},
          {"git_describe", SPOTSIM_GIT_DESCRIBE},
          {"runs", std::move(jr)},
          {"outputs", outputs}};
}

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SPOTSIM_OUT_DIR"); env && *env) return env;
  return "spotsim_out";
}

namespace {

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << body;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

// Runs every config concurrently; results come back in input order.
std::vector<MetricsReport> run_all(const std::vector<SimConfig>& configs) {
  std::vector<std::future<MetricsReport>> futures;
  futures.reserve(configs.size());
  for (const SimConfig& c : configs)
    futures.push_back(std::async(std::launch::async, [c] { return run(c); }));
  std::vector<MetricsReport> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

}  // namespace

int cmd_run(const std::string& config_path, const Overrides& o, const std::string& out_dir,
            std::ostream& err) {
  return guarded(err, [&] {
    const SimConfig base = apply_overrides(load_config(config_path), o);
    const std::vector<Policy> policies =
        o.policies.empty() ? std::vector<Policy>{base.policy} : o.policies;
    std::vector<SimConfig> configs;
    std::vector<std::pair<std::string, SimConfig>> runs;
    for (Policy p : policies) {
      SimConfig c = base;
      c.policy = p;
      configs.push_back(c);
      runs.emplace_back(to_string(p), c);
    }
    // Load once up front so bad paths fail before any work starts.
    for (const SimConfig& c : configs) load_inputs(c);
    const std::vector<MetricsReport> reports = run_all(configs);

    fs::create_directories(out_dir);
    std::vector<std::string> outputs;
    std::ostringstream metrics;
    metrics << "policy,metric,value\n";
    for (const MetricsReport& r : reports) {
      std::ostringstream req;
      write_requests_csv(req, r);
      const std::string req_name = r.policy + "_requests.csv";
      const std::string sum_name = r.policy + "_summary.json";
      write_file(fs::path(out_dir) / req_name, req.str());
      write_file(fs::path(out_dir) / sum_name, summary_json(r).dump(2) + "\n");
      outputs.push_back(req_name);
      outputs.push_back(sum_name);
      write_metric_rows(metrics, r.policy + ",", r);
    }
    write_file(fs::path(out_dir) / "metrics.csv", metrics.str());
    outputs.push_back("metrics.csv");
    write_file(fs::path(out_dir) / "manifest.json",
               manifest_json("run", runs, outputs).dump(2) + "\n");
    return static_cast<int>(kOk);
  });
}

int cmd_sweep(const std::string& config_path, const SweepAxes& axes, const Overrides& o,
              const std::string& out_dir, std::ostream& err) {
  return guarded(err, [&] {
    const SimConfig base = apply_overrides(load_config(config_path), o);
    const std::vector<double> rates =
        axes.rates.empty() ? std::vector<double>{base.workload.rate} : axes.rates;
    const std::vector<Policy> policies =
        axes.policies.empty() ? std::vector<Policy>{base.policy} : axes.policies;
    const std::vector<std::string> traces =
        axes.traces.empty() ? std::vector<std::string>{base.trace_path} : axes.traces;
    if (!axes.rates.empty() && base.workload.type != WorkloadConfig::Type::kFixedRate)
      throw ConfigError("a rate axis needs a fixed_rate workload");

    std::vector<SimConfig> configs;
    std::vector<std::pair<std::string, SimConfig>> runs;
    std::vector<std::string> prefixes;
    for (const std::string& trace : traces) {
      for (double rate : rates) {
        for (Policy p : policies) {
          SimConfig c = base;
          c.trace_path = trace;
          c.workload.rate = rate;
          c.policy = p;
          const std::string prefix = fmt(rate) + "," + to_string(p) + "," + trace + ",";
          configs.push_back(c);
          runs.emplace_back(prefix.substr(0, prefix.size() - 1), c);
          prefixes.push_back(prefix);
        }
      }
    }
    for (const SimConfig& c : configs) load_inputs(c);
    const std::vector<MetricsReport> reports = run_all(configs);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "rate,policy,trace,metric,value\n";
    for (std::size_t i = 0; i < reports.size(); ++i) write_metric_rows(csv, prefixes[i], reports[i]);
    write_file(fs::path(out_dir) / "sweep.csv", csv.str());
    write_file(fs::path(out_dir) / "manifest.json",
               manifest_json("sweep", runs, {"sweep.csv"}).dump(2) + "\n");
    return static_cast<int>(kOk);
  });
}

int cmd_ablate(const std::string& config_path, const Overrides& o, const std::string& out_dir,
               std::ostream& err) {
  return guarded(err, [&] {
    const SimConfig base = apply_overrides(load_config(config_path), o);
    const auto variants = ablation_variants(base);
    std::vector<SimConfig> configs;
    for (const auto& [name, c] : variants) configs.push_back(c);
    load_inputs(configs.front());
    const std::vector<MetricsReport> reports = run_all(configs);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "variant,metric,value\n";
    for (std::size_t i = 0; i < reports.size(); ++i)
      write_metric_rows(csv, variants[i].first + ",", reports[i]);
    write_file(fs::path(out_dir) / "ablation.csv", csv.str());
    write_file(fs::path(out_dir) / "manifest.json",
               manifest_json("ablate", variants, {"ablation.csv"}).dump(2) + "\n");
    return static_cast<int>(kOk);
  });
}

namespace {

std::vector<double> parse_rates(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad rate '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> split(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"spotsim: spot-instance LLM serving simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SPOTSIM_VERSION);

  std::string config, policy, trace, profile, out, rates, policies, traces;
  std::optional<double> rate;
  std::optional<std::uint64_t> seed;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "simulation config (JSON)")->required();
    sub->add_option("--rate", rate, "override the fixed arrival rate");
    sub->add_option("--seed", seed, "override the workload seed");
    sub->add_option("--trace", trace, "override the availability trace");
    sub->add_option("--profile", profile, "override the performance profile");
    sub->add_option("--out", out, "output directory (default $SPOTSIM_OUT_DIR)");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run one simulation per policy");
  common(run_cmd);
  run_cmd->add_option("--policy", policy, "comma-separated policies");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Cartesian sweep over rates, policies, traces");
  common(sweep_cmd);
  sweep_cmd->add_option("--rates", rates, "comma-separated arrival rates");
  sweep_cmd->add_option("--policies", policies, "comma-separated policies");
  sweep_cmd->add_option("--traces", traces, "comma-separated trace files");
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "cumulative feature ablation");
  common(ablate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? static_cast<int>(kOk) : static_cast<int>(kConfigError);
  }

  Overrides o;
  o.rate = rate;
  o.seed = seed;
  if (!trace.empty()) o.trace = trace;
  if (!profile.empty()) o.profile = profile;
  const std::string out_dir = resolve_out_dir(out);

  if (run_cmd->parsed()) {
    try {
      if (!policy.empty()) o.policies = parse_policies(policy);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    }
    return cmd_run(config, o, out_dir, std::cerr);
  }
  if (sweep_cmd->parsed()) {
    SweepAxes axes;
    try {
      axes.rates = parse_rates(rates);
      if (!policies.empty()) axes.policies = parse_policies(policies);
      axes.traces = split(traces);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    }
    return cmd_sweep(config, axes, o, out_dir, std::cerr);
  }
  return cmd_ablate(config, o, out_dir, std::cerr);
}

}  // namespace spotsim::cli
