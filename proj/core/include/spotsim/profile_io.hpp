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
#ifndef SPOTSIM_PROFILE_IO_HPP_
#define SPOTSIM_PROFILE_IO_HPP_

#include <filesystem>

#include <nlohmann/json.hpp>

#include "spotsim/cost_model.hpp"

namespace spotsim {

// Profile document: model spec, "P,M,B"-keyed exec table, eta, link
// parameters, restart ratios and the price sheet.
PerfProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const PerfProfile& profile);
PerfProfile load_profile(const std::filesystem::path& path);

}  // namespace spotsim

#endif  // SPOTSIM_PROFILE_IO_HPP_
