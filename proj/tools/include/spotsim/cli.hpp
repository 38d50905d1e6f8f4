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
#ifndef SPOTSIM_CLI_HPP_
#define SPOTSIM_CLI_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spotsim/metrics.hpp"
#include "spotsim/sim_config.hpp"

namespace spotsim::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kRuntimeError = 3 };

struct Overrides {
  std::optional<double> rate;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> trace;
  std::optional<std::string> profile;
  std::vector<Policy> policies;  // empty: the config's policy
};

struct SweepAxes {
  std::vector<double> rates;
  std::vector<Policy> policies;
  std::vector<std::string> traces;
};

// Applies flag overrides; throws ConfigError when one does not fit the workload.
SimConfig apply_overrides(SimConfig config, const Overrides& o);

std::vector<Policy> parse_policies(const std::string& list);

// Spotserve with features switched off cumulatively: controller, planner,
// arranger, mapper. First entry is the full system.
std::vector<std::pair<std::string, SimConfig>> ablation_variants(const SimConfig& base);

// policy,metric,value rows for one report; `prefix` columns come first.
void write_metric_rows(std::ostream& out, const std::string& prefix, const MetricsReport& r);

nlohmann::json manifest_json(const std::string& command,
                             const std::vector<std::pair<std::string, SimConfig>>& runs,
                             const std::vector<std::string>& outputs);

// Each command writes its artifacts under `out_dir` and returns an ExitCode;
// diagnostics go to `err`.
int cmd_run(const std::string& config_path, const Overrides& o, const std::string& out_dir,
            std::ostream& err);
int cmd_sweep(const std::string& config_path, const SweepAxes& axes, const Overrides& o,
              const std::string& out_dir, std::ostream& err);
int cmd_ablate(const std::string& config_path, const Overrides& o, const std::string& out_dir,
               std::ostream& err);

// Output directory: the flag, else $SPOTSIM_OUT_DIR, else ./spotsim_out.
std::string resolve_out_dir(const std::string& flag);

int main_entry(int argc, char** argv);

}  // namespace spotsim::cli

#endif  // SPOTSIM_CLI_HPP_
