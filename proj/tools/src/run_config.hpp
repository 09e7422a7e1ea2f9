// Copyright 2026 The LPL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpl/dataset.hpp"
#include "lpl/prototype.hpp"
#include "lpl/sof.hpp"

namespace lpl::cli {

/// Every tunable of a run. Serialized as a flat JSON object whose keys are
/// listed in config_keys(); unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  DataFormat data_format = DataFormat::kCsv;
  SynthConfig synth;
  SofConfig sof;
  TrainConfig train;
  /// Calibration grid spec, see parse_delta_grid.
  std::string delta_grid = "0:1:0.02";

  /// Copies `seed` into every stage.
  void propagate_seed();
  void validate() const;
};

const std::vector<std::string>& config_keys();

nlohmann::ordered_json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// "0.3" -> {0.3}; "0,0.1,0.5" -> list; "lo:hi:step" -> inclusive range.
std::vector<double> parse_delta_grid(const std::string& spec);
/// Comma-separated reals, with "a..b" accepted for consecutive integers.
std::vector<double> parse_value_list(const std::string& spec);

}  // namespace lpl::cli
