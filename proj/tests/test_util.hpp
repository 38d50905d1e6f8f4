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
#ifndef SPOTSIM_TESTS_TEST_UTIL_HPP_
#define SPOTSIM_TESTS_TEST_UTIL_HPP_

#include <string>
#include <vector>

#include "spotsim/cost_model.hpp"
#include "spotsim/domain.hpp"

namespace spotsim::testing {

inline std::string data_path(const std::string& rel) {
  return std::string(SPOTSIM_DATA_DIR) + "/" + rel;
}

// Small model with a linear latency table over every (P, M, B) up to the
// given limits. Latency grows with B and shrinks with P*M.
inline PerfProfile toy_profile(int layers, int gpus_per_instance, int max_p = 4, int max_m = 4) {
  PerfProfile p;
  p.model.name = "toy";
  p.model.num_layers = layers;
  p.model.bytes_per_layer = 1e8;
  p.model.kv_bytes_per_token_per_layer = 1e3;
  p.gpus_per_instance = gpus_per_instance;
  p.pipeline_efficiency = 0.5;
  p.bandwidth = 1e9;
  p.transfer_latency = 0.0;
  for (int P = 1; P <= max_p; ++P)
    for (int M = 1; M <= max_m; M *= 2)
      for (int B : {1, 2, 4, 8}) {
        const double l = 4.0 / (P * M) + 0.5 * P + 0.2 * M + 0.3 * B;
        p.exec[ExecKey{P, M, B}] = ExecEntry{0.2 * l, 0.8 * l / 128.0};
      }
  return p;
}

inline InstanceState active_instance(const std::string& id, int gpus) {
  InstanceState s;
  s.id = id;
  s.gpus = gpus;
  s.gpu_inventories.resize(gpus);
  return s;
}

}  // namespace spotsim::testing

#endif  // SPOTSIM_TESTS_TEST_UTIL_HPP_
