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
#include "spotsim/workload.hpp"

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "spotsim/errors.hpp"

namespace spotsim {

std::vector<double> gamma_arrivals(double rate, double cv, double duration, std::uint64_t seed) {
  if (!(rate > 0) || !(cv > 0)) throw ConfigError("gamma_arrivals needs rate > 0 and cv > 0");
  const double shape = 1.0 / (cv * cv);
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gap(shape, 1.0 / (rate * shape));
  std::vector<double> out;
  double t = gap(rng);
  while (t < duration) {
    out.push_back(t);
    t += gap(rng);
  }
  return out;
}

std::vector<Arrival> parse_arrivals(std::istream& in, const std::string& source, int s_in,
                                    int s_out) {
  std::vector<Arrival> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, n, e.what());
    }
    if (!j.is_object() || !j.contains("t") || !j["t"].is_number())
      throw ParseError(source, n, "arrival needs numeric \"t\"");
    Arrival a;
    a.t = j["t"].get<double>();
    a.s_in = j.value("s_in", s_in);
    a.s_out = j.value("s_out", s_out);
    if (a.t < 0 || a.s_in < 0 || a.s_out < 1) throw ParseError(source, n, "arrival out of range");
    if (!out.empty() && a.t < out.back().t) throw ParseError(source, n, "arrivals out of order");
    out.push_back(a);
  }
  return out;
}

std::vector<Arrival> load_arrivals(const std::string& path, int s_in, int s_out) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open arrival file " + path);
  return parse_arrivals(in, path, s_in, s_out);
}

}  // namespace spotsim
