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
#include <cstdio>
#include <exception>
#include <string>

#include "acceptance/criteria.hpp"

namespace {

using spotsim::acceptance::Outcome;

struct Criterion {
  const char* name;
  void (*run)(Outcome&);
};

}  // namespace

int main() {
  namespace a = spotsim::acceptance;
  const Criterion criteria[] = {
      {"km optimality", a::km_optimality},
      {"two-step mapping reduction", a::two_step_mapping},
      {"migration plan soundness", a::migration_soundness},
      {"arrangement correctness", a::arrangement},
      {"latency model consistency", a::latency_consistency},
      {"case-study scenario", a::case_study},
      {"overload reproduction", a::overload},
      {"cost accounting", a::cost_accounting},
      {"determinism", a::determinism},
      {"ablation monotonicity", a::ablation},
  };
  int failed = 0;
  int n = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    failed += !out.pass();
    std::string line = out.detail.str();
    for (std::size_t i = 0; i < out.failures.size() && i < 3; ++i)
      line += (i == 0 ? " | failed: " : "; ") + out.failures[i];
    if (out.failures.size() > 3) line += "; +" + std::to_string(out.failures.size() - 3) + " more";
    std::printf("%s criterion %d (%s): %s\n", out.pass() ? "PASS" : "FAIL", ++n, c.name,
                line.c_str());
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
