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

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bodymeasure/bodygen.hpp"
#include "bodymeasure/imaging.hpp"
#include "bodymeasure/measure.hpp"

namespace bm {

enum class Split { kTrain, kVal, kTest };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct SampleRecord {
  std::string sample_id;
  Sex sex = Sex::kMale;
  std::string image_path;  // relative to the dataset root
  MeasurementSet measurements;
  std::uint64_t spec_seed = 0;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct SplitFractions {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
  friend bool operator==(const SplitFractions&, const SplitFractions&) = default;
};

struct DatasetManifest {
  int format_version = 1;
  std::vector<SampleRecord> records;
  std::map<std::string, Split, std::less<>> split;  // empty until split_dataset
  std::string config_digest;
  nlohmann::json generation = nlohmann::json::object();  // echo of the generation config
  std::uint64_t master_seed = 0;
  std::optional<std::uint64_t> shuffle_seed;
  std::optional<SplitFractions> fractions;

  bool is_split() const { return fractions.has_value(); }
  const SampleRecord& record(std::string_view sample_id) const;  // throws LookupError
  std::vector<const SampleRecord*> records_in(Split which) const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

inline constexpr std::string_view kManifestHeader = "manifest.header.json";
inline constexpr std::string_view kManifestRecords = "manifest.records.jsonl";
inline constexpr std::string_view kProvenanceFile = "provenance.json";

struct GenerationRequest {
  int n_per_sex = 0;
  GenerationRanges ranges = default_generation_ranges();
  RenderConfig render;
  MeasureConfig measure;
  int resolution = 128;
  std::uint64_t master_seed = 0;
};

nlohmann::json generation_config_json(const GenerationRequest& request);
// SHA-256 over the canonical generation config (seed excluded; it is recorded
// separately).
std::string generation_digest(const GenerationRequest& request);

std::uint64_t sample_seed(std::uint64_t master_seed, Sex sex, int index);
std::string sample_id(Sex sex, int index);

// Builds, measures and renders n_per_sex bodies of each sex into `out_dir`
// (images/<sex>/<sample_id>.png plus the manifest). The tree is assembled in
// a sibling temp directory and renamed into place.
DatasetManifest generate_dataset(const GenerationRequest& request,
                                 const std::filesystem::path& out_dir);

// Stratified by sex: each sex is shuffled with the seed and cut by the
// fractions (rounding remainders go to train).
DatasetManifest split_dataset(DatasetManifest manifest, const SplitFractions& fractions,
                              std::uint64_t seed);

// (male test ids, female test ids). Throws StateError if unsplit.
std::pair<std::vector<std::string>, std::vector<std::string>> test_subsets(
    const DatasetManifest& manifest);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& root);
DatasetManifest read_manifest(const std::filesystem::path& root);

// records.size() x 16 target matrix in kMeasurementNames order.
Eigen::MatrixXd target_matrix(const std::vector<const SampleRecord*>& records);

// Writes `text` to a temp file next to `path` and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

// Provenance stamp present in every artifact directory.
void write_provenance(const std::filesystem::path& dir, std::string_view artifact,
                      std::string_view config_digest, std::uint64_t seed,
                      const nlohmann::json& extra = nlohmann::json::object());

}  // namespace bm
