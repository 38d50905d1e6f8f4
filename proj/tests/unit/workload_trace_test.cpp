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
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "spotsim/errors.hpp"
#include "spotsim/trace.hpp"
#include "spotsim/workload.hpp"
#include "test_util.hpp"

namespace spotsim {
namespace {

struct GapStats {
  double mean = 0.0;
  double cv = 0.0;
};

GapStats gap_stats(const std::vector<double>& t) {
  std::vector<double> gaps;
  for (std::size_t i = 1; i < t.size(); ++i) gaps.push_back(t[i] - t[i - 1]);
  double sum = 0.0, sq = 0.0;
  for (double g : gaps) sum += g;
  const double mean = sum / gaps.size();
  for (double g : gaps) sq += (g - mean) * (g - mean);
  return {mean, std::sqrt(sq / (gaps.size() - 1)) / mean};
}

TEST(GammaArrivals, MomentsMatchRateAndCv) {
  for (double cv : {1.0, 2.0, 0.5}) {
    const auto t = gamma_arrivals(10.0, cv, 1e5, 99);
    const GapStats s = gap_stats(t);
    EXPECT_NEAR(s.mean, 0.1, 0.1 * 0.02) << "cv " << cv;
    EXPECT_NEAR(s.cv, cv, cv * 0.05) << "cv " << cv;
  }
}

TEST(GammaArrivals, SortedInsideHorizonAndDeterministic) {
  const auto a = gamma_arrivals(0.35, 6.0, 1200.0, 7);
  EXPECT_EQ(a, gamma_arrivals(0.35, 6.0, 1200.0, 7));
  EXPECT_NE(a, gamma_arrivals(0.35, 6.0, 1200.0, 8));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  for (double x : a) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1200.0);
  }
  EXPECT_THROW(gamma_arrivals(0.0, 1.0, 10.0, 1), ConfigError);
  EXPECT_THROW(gamma_arrivals(1.0, 0.0, 10.0, 1), ConfigError);
}

TEST(ParseArrivals, DefaultsAndErrors) {
  std::istringstream ok("{\"t\": 0.5}\n\n{\"t\": 1.0, \"s_in\": 64, \"s_out\": 8}\n");
  const auto a = parse_arrivals(ok, "mem", 512, 128);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].s_in, 512);
  EXPECT_EQ(a[1].s_out, 8);
  std::istringstream bad("{\"t\": 2}\n{\"t\": 1}\n");
  try {
    parse_arrivals(bad, "mem", 512, 128);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream junk("{\"t\": 2\n");
  EXPECT_THROW(parse_arrivals(junk, "mem", 512, 128), ParseError);
}

TEST(ParseTrace, KindsDefaultsAndErrors) {
  std::istringstream in(
      "{\"t\": 120, \"kind\": \"preempt\", \"id\": \"i-3\"}\n"
      "{\"t\": 720, \"kind\": \"acquire\", \"id\": \"i-10\", \"itype\": \"ondemand\", "
      "\"ready_in\": 60}\n");
  const auto ev = parse_trace(in, "mem", TraceDefaults{20.0, 90.0});
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].kind, TraceKind::kPreempt);
  EXPECT_DOUBLE_EQ(ev[0].grace, 20.0);
  EXPECT_EQ(ev[1].itype, InstanceKind::kOnDemand);
  EXPECT_DOUBLE_EQ(ev[1].ready_in, 60.0);

  for (const char* bad : {"{\"t\": 1, \"kind\": \"explode\", \"id\": \"x\"}",
                          "{\"t\": 1, \"kind\": \"acquire\", \"id\": \"x\", \"itype\": \"gold\"}",
                          "{\"t\": -1, \"kind\": \"preempt\", \"id\": \"x\"}",
                          "{\"kind\": \"preempt\", \"id\": \"x\"}", "not json"}) {
    std::istringstream s(std::string("\n") + bad + "\n");
    try {
      parse_trace(s, "mem");
      FAIL() << bad;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u) << bad;
    }
  }
}

TEST(LoadTrace, ShippedTraceFollowsScenario) {
  const auto ev = load_trace(testing::data_path("traces/bs.jsonl"));
  int preempts = 0, acquires = 0;
  for (const auto& e : ev) (e.kind == TraceKind::kPreempt ? preempts : acquires)++;
  EXPECT_EQ(preempts, 3);
  EXPECT_EQ(acquires, 2);
  EXPECT_THROW(load_trace("/nonexistent/trace.jsonl"), ConfigError);
}

}  // namespace
}  // namespace spotsim
