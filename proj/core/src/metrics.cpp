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
#include "spotsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include <nlohmann/json.hpp>

#include "spotsim/errors.hpp"

namespace spotsim {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  if (!(q > 0) || q > 100) throw DomainError("percentile q must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::size_t rank = static_cast<std::size_t>(std::ceil(q / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::vector<double> accumulated_max(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(out.empty() ? v : std::max(out.back(), v));
  return out;
}

std::vector<std::pair<double, double>> MetricsReport::accumulated_max_series() const {
  std::vector<const RequestRecord*> done;
  for (const RequestRecord& r : requests)
    if (r.completed()) done.push_back(&r);
  std::stable_sort(done.begin(), done.end(), [](const RequestRecord* a, const RequestRecord* b) {
    return a->completion < b->completion;
  });
  std::vector<std::pair<double, double>> out;
  double m = 0.0;
  for (const RequestRecord* r : done) {
    m = std::max(m, r->l_req());
    out.emplace_back(r->completion, m);
  }
  return out;
}

void finalize_report(MetricsReport& report, const PriceSheet& prices) {
  std::vector<double> lat;
  double tokens = 0.0;
  report.arrived = 0;
  report.completed = 0;
  report.outstanding_at_horizon = 0;
  for (const RequestRecord& r : report.requests) {
    if (r.arrival <= report.horizon) {
      ++report.arrived;
      if (!(r.completed() && r.completion <= report.horizon)) ++report.outstanding_at_horizon;
    }
    if (!r.completed()) continue;
    ++report.completed;
    lat.push_back(r.l_req());
    tokens += r.s_out;
  }
  report.tokens_served = tokens;
  double sum = 0.0;
  for (double v : lat) sum += v;
  report.avg_latency = lat.empty() ? 0.0 : sum / static_cast<double>(lat.size());
  report.p50 = percentile(lat, 50);
  report.p90 = percentile(lat, 90);
  report.p99 = percentile(lat, 99);
  report.max_latency = lat.empty() ? 0.0 : *std::max_element(lat.begin(), lat.end());
  report.cost = monetary_cost(report.usage, prices, tokens);
}

void write_requests_csv(std::ostream& out, const MetricsReport& report) {
  out << "policy,id,arrival,dispatch,completion,s_in,s_out,restarts,l_req,l_sch,l_exe\n";
  out << std::setprecision(10);
  for (const RequestRecord& r : report.requests) {
    out << report.policy << ',' << r.id << ',' << r.arrival << ',' << r.dispatch << ','
        << r.completion << ',' << r.s_in << ',' << r.s_out << ',' << r.restarts << ',';
    if (r.completed()) out << r.l_req() << ',' << r.l_sch() << ',' << r.l_exe();
    else out << ",,";
    out << '\n';
  }
}

nlohmann::json summary_json(const MetricsReport& report) {
  nlohmann::json reconf = nlohmann::json::array();
  for (const ReconfigEntry& e : report.reconfigurations)
    reconf.push_back({{"t", e.t},
                      {"config", e.config.to_string()},
                      {"shape", e.config.shape()},
                      {"t_mig", e.t_mig},
                      {"reason", e.reason}});
  return {{"policy", report.policy},
          {"horizon", report.horizon},
          {"arrived", report.arrived},
          {"completed", report.completed},
          {"outstanding_at_horizon", report.outstanding_at_horizon},
          {"avg_latency", report.avg_latency},
          {"p50", report.p50},
          {"p90", report.p90},
          {"p99", report.p99},
          {"max_latency", report.max_latency},
          {"tokens_served", report.tokens_served},
          {"cost_usd", report.cost.total_usd},
          {"cost_per_token_usd", report.cost.per_token_usd},
          {"reconfigurations", std::move(reconf)}};
}

}  // namespace spotsim
