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
#ifndef SPOTSIM_WORKLOAD_HPP_
#define SPOTSIM_WORKLOAD_HPP_

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace spotsim {

struct Arrival {
  double t = 0.0;
  int s_in = 512;
  int s_out = 128;
};

// Arrival times in [0, duration) with i.i.d. gamma gaps: shape 1/CV^2,
// mean 1/rate.
std::vector<double> gamma_arrivals(double rate, double cv, double duration, std::uint64_t seed);

// JSON Lines, one {"t", "s_in", "s_out"} object per line; s_in and s_out
// fall back to the given defaults. Blank lines are skipped.
std::vector<Arrival> parse_arrivals(std::istream& in, const std::string& source, int s_in,
                                    int s_out);
std::vector<Arrival> load_arrivals(const std::string& path, int s_in, int s_out);

}  // namespace spotsim

#endif  // SPOTSIM_WORKLOAD_HPP_
