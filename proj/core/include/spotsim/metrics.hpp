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
#ifndef SPOTSIM_METRICS_HPP_
#define SPOTSIM_METRICS_HPP_

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spotsim/cost_model.hpp"
#include "spotsim/domain.hpp"

namespace spotsim {

struct RequestRecord {
  RequestId id = 0;
  double arrival = 0.0;
  double dispatch = -1.0;    // last dispatch; -1 if never dispatched
  double completion = -1.0;  // -1 if not completed
  int s_in = 0;
  int s_out = 0;
  int restarts = 0;  // times progress was thrown away

  bool completed() const { return completion >= 0.0; }
  double l_req() const { return completion - arrival; }
  double l_sch() const { return dispatch - arrival; }
  double l_exe() const { return completion - dispatch; }
};

struct ReconfigEntry {
  double t = 0.0;
  ParallelConfig config;
  double t_mig = 0.0;  // service stall charged for the switch
  std::string reason;
};

// Nearest rank: the ceil(q/100 * n)-th smallest value. q in (0, 100].
double percentile(std::vector<double> values, double q);
std::vector<double> accumulated_max(std::span<const double> values);

struct MetricsReport {
  std::string policy;
  std::vector<RequestRecord> requests;  // by id
  std::vector<ReconfigEntry> reconfigurations;
  std::vector<UsageRecord> usage;
  double horizon = 0.0;
  int arrived = 0;
  int completed = 0;
  int outstanding_at_horizon = 0;  // arrived but unfinished at the horizon
  double avg_latency = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double max_latency = 0.0;
  double tokens_served = 0.0;
  CostSummary cost;

  // Latency of completed requests in completion order, running max.
  std::vector<std::pair<double, double>> accumulated_max_series() const;
};

// Fills the latency and cost aggregates from the raw records.
void finalize_report(MetricsReport& report, const PriceSheet& prices);

void write_requests_csv(std::ostream& out, const MetricsReport& report);
nlohmann::json summary_json(const MetricsReport& report);

}  // namespace spotsim

#endif  // SPOTSIM_METRICS_HPP_
