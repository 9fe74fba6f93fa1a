// Copyright 2026 The Bodymeasure Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bodymeasure/bodygen.hpp"
#include "bodymeasure/datakit.hpp"
#include "bodymeasure/imaging.hpp"
#include "bodymeasure/regressor.hpp"
#include "bodymeasure/screening.hpp"

namespace bm {

// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitDivergence = 4,
  kExitIo = 5,
};

// Compute-device override. Only "cpu" is available.
inline constexpr const char* kDeviceEnv = "BODYMEASURE_DEVICE";

struct PipelineConfig {
  std::filesystem::path dataset;  // dataset root
  std::optional<std::filesystem::path> ranges_file;
  GenerationRanges ranges = default_generation_ranges();
  int n_per_sex = 256;
  int resolution = 128;
  RenderConfig render;
  MeasureConfig measure;
  SplitFractions fractions;
  BackboneConfig backbone = BackboneConfig::preset("tiny_test");
  HeadConfig head;
  TrainConfig train;
  ProportionThresholds thresholds;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

// Relative paths in the file resolve against the file's directory. Missing
// referenced files raise ConfigError.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir = {});

// Runs one subcommand (gen, split, train, eval, predict, screen). Errors are
// reported on `err` as one line:
//   error=<class> exit=<code> message=<json string>
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bm
