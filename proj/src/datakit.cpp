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

#include "bodymeasure/datakit.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "bodymeasure/digest.hpp"
#include "bodymeasure/errors.hpp"
#include "bodymeasure/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace bm {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ValidationError("unknown split label '" + std::string(text) + "'");
}

const SampleRecord& DatasetManifest::record(std::string_view id) const {
  for (const SampleRecord& r : records) {
    if (r.sample_id == id) return r;
  }
  throw LookupError("no sample '" + std::string(id) + "'");
}

std::vector<const SampleRecord*> DatasetManifest::records_in(Split which) const {
  if (!is_split()) throw StateError("manifest has not been split");
  std::vector<const SampleRecord*> out;
  for (const SampleRecord& r : records) {
    const auto it = split.find(r.sample_id);
    if (it == split.end()) throw StateError("sample '" + r.sample_id + "' has no split label");
    if (it->second == which) out.push_back(&r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const fs::path& path, std::string_view text) {
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_provenance(const fs::path& dir, std::string_view artifact, std::string_view config_digest,
                      std::uint64_t seed, const json& extra) {
  ordered_json doc;
  doc["artifact"] = artifact;
  doc["config_digest"] = config_digest;
  doc["seed"] = seed;
  for (const auto& [k, v] : extra.items()) doc[k] = v;
  write_text_atomic(dir / kProvenanceFile, doc.dump(2) + "\n");
}

namespace {

double round_micro(double v) { return std::round(v * 1e6) / 1e6; }

ordered_json record_to_json(const SampleRecord& r) {
  ordered_json m = ordered_json::object();
  for (std::string_view name : kMeasurementNames) m[std::string(name)] = r.measurements.at(name);
  ordered_json j;
  j["sample_id"] = r.sample_id;
  j["sex"] = to_string(r.sex);
  j["image_path"] = r.image_path;
  j["spec_seed"] = r.spec_seed;
  j["measurements"] = m;
  return j;
}

SampleRecord record_from_json(const json& j) {
  SampleRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.sex = parse_sex(j.at("sex").get<std::string>());
  r.image_path = j.at("image_path").get<std::string>();
  r.spec_seed = j.at("spec_seed").get<std::uint64_t>();
  for (const auto& [k, v] : j.at("measurements").items()) r.measurements.set(k, v.get<double>());
  r.measurements.validate();
  return r;
}

}  // namespace

void write_manifest(const DatasetManifest& manifest, const fs::path& root) {
  ordered_json header;
  header["format_version"] = manifest.format_version;
  header["config_digest"] = manifest.config_digest;
  header["master_seed"] = manifest.master_seed;
  header["generation"] = manifest.generation;
  header["record_count"] = manifest.records.size();
  header["shuffle_seed"] = manifest.shuffle_seed ? ordered_json(*manifest.shuffle_seed) : ordered_json();
  if (manifest.fractions) {
    header["split_fractions"] = {manifest.fractions->train, manifest.fractions->val,
                                 manifest.fractions->test};
  } else {
    header["split_fractions"] = nullptr;
  }
  ordered_json split = ordered_json::object();
  for (const SampleRecord& r : manifest.records) {
    const auto it = manifest.split.find(r.sample_id);
    if (it != manifest.split.end()) split[r.sample_id] = to_string(it->second);
  }
  header["split"] = split;

  std::string lines;
  for (const SampleRecord& r : manifest.records) lines += record_to_json(r).dump() + "\n";
  write_text_atomic(root / kManifestRecords, lines);
  write_text_atomic(root / kManifestHeader, header.dump(2) + "\n");
}

DatasetManifest read_manifest(const fs::path& root) {
  DatasetManifest m;
  try {
    const json header = json::parse(read_text(root / kManifestHeader));
    m.format_version = header.at("format_version").get<int>();
    m.config_digest = header.at("config_digest").get<std::string>();
    m.master_seed = header.at("master_seed").get<std::uint64_t>();
    m.generation = header.at("generation");
    if (!header.at("shuffle_seed").is_null()) m.shuffle_seed = header["shuffle_seed"].get<std::uint64_t>();
    if (!header.at("split_fractions").is_null()) {
      const auto& f = header["split_fractions"];
      m.fractions = SplitFractions{f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>()};
    }
    for (const auto& [id, label] : header.at("split").items()) {
      m.split[id] = parse_split(label.get<std::string>());
    }
    std::istringstream lines(read_text(root / kManifestRecords));
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty()) m.records.push_back(record_from_json(json::parse(line)));
    }
    if (m.records.size() != header.at("record_count").get<std::size_t>()) {
      throw ValidationError("manifest record count does not match its header");
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest in " + root.string() + ": " + e.what());
  }
  if (m.fractions) {
    for (const SampleRecord& r : m.records) {
      if (!m.split.count(r.sample_id)) throw ValidationError("sample '" + r.sample_id + "' has no split label");
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Generation

nlohmann::json generation_config_json(const GenerationRequest& request) {
  ordered_json j;
  j["n_per_sex"] = request.n_per_sex;
  j["resolution"] = request.resolution;
  j["ranges"] = ordered_json::parse(serialize_generation_ranges(request.ranges));
  j["render"] = json(request.render);
  j["measure"] = {{"waist_region_fraction", request.measure.waist_region_fraction},
                  {"levels", request.measure.levels}};
  return json::parse(j.dump());
}

std::string generation_digest(const GenerationRequest& request) {
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  return sha256_hex(generation_config_json(request).dump());
}

std::uint64_t sample_seed(std::uint64_t master_seed, Sex sex, int index) {
  return derive_seed(master_seed, sex == Sex::kMale ? 0x6d : 0x66, static_cast<std::uint64_t>(index));
}

std::string sample_id(Sex sex, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%06d", sex == Sex::kMale ? "male" : "female", index);
  return buf;
}

DatasetManifest generate_dataset(const GenerationRequest& request, const fs::path& out_dir) {
  if (request.n_per_sex < 1) throw ConfigError("n_per_sex must be >= 1");
  if (request.resolution < kMinResolution) {
    throw ConfigError("resolution must be >= " + std::to_string(kMinResolution));
  }
  validate_ranges(request.ranges);
  request.render.validate();

  std::error_code ec;
  if (fs::exists(out_dir, ec) && !fs::is_empty(out_dir, ec)) {
    throw IoError("output directory is not empty: " + out_dir.string());
  }
  fs::path staging = out_dir;
  staging += ".partial";
  fs::remove_all(staging, ec);
  for (const char* sex : {"male", "female"}) {
    fs::create_directories(staging / "images" / sex, ec);
    if (ec) throw IoError("cannot create " + (staging / "images" / sex).string() + ": " + ec.message());
  }

  const int n = request.n_per_sex;
  std::vector<SampleRecord> records(2 * static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> failures(records.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < 2 * n; ++i) {
    try {
      const Sex sex = i < n ? Sex::kMale : Sex::kFemale;
      const int index = i % n;
      SampleRecord& r = records[i];
      r.sex = sex;
      r.sample_id = sample_id(sex, index);
      r.spec_seed = sample_seed(request.master_seed, sex, index);
      r.image_path = "images/" + std::string(to_string(sex)) + "/" + r.sample_id + ".png";
      const BodySpec spec = sample_body_spec(sex, r.spec_seed, request.ranges);
      const BodyMesh body = build_body(spec, request.resolution);
      const MeasurementSet measured = measure_all(body, request.measure);
      for (const auto& [name, value] : measured.values()) {
        r.measurements.set(name, round_micro(value));
      }
      write_png(render_silhouette(body.mesh, request.render), staging / r.image_path);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  DatasetManifest manifest;
  manifest.records = std::move(records);
  manifest.generation = generation_config_json(request);
  manifest.config_digest = generation_digest(request);
  manifest.master_seed = request.master_seed;
  write_manifest(manifest, staging);
  write_provenance(staging, "dataset", manifest.config_digest, request.master_seed);

  if (fs::exists(out_dir, ec)) fs::remove(out_dir, ec);  // empty by the check above
  fs::rename(staging, out_dir, ec);
  if (ec) throw IoError("cannot move " + staging.string() + " to " + out_dir.string() + ": " + ec.message());
  return manifest;
}

// ---------------------------------------------------------------------------
// Splits

DatasetManifest split_dataset(DatasetManifest manifest, const SplitFractions& f, std::uint64_t seed) {
  for (double v : {f.train, f.val, f.test}) {
    if (!(v >= 0.0)) throw ConfigError("split fractions must be non-negative");
  }
  if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  manifest.split.clear();
  for (Sex sex : {Sex::kMale, Sex::kFemale}) {
    std::vector<std::string> ids;
    for (const SampleRecord& r : manifest.records) {
      if (r.sex == sex) ids.push_back(r.sample_id);
    }
    Rng rng(derive_seed(seed, sex == Sex::kMale ? 0x6d : 0x66));
    rng.shuffle(std::span<std::string>(ids));
    // The epsilon absorbs representation error such as 500 * 0.15.
    const auto count = [&](double fraction) {
      return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ids.size()) + 1e-9));
    };
    const std::size_t n_val = count(f.val);
    const std::size_t n_test = count(f.test);
    const std::size_t n_train = ids.size() - n_val - n_test;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      manifest.split[ids[i]] = i < n_train ? Split::kTrain : i < n_train + n_val ? Split::kVal : Split::kTest;
    }
  }
  manifest.shuffle_seed = seed;
  manifest.fractions = f;
  return manifest;
}

std::pair<std::vector<std::string>, std::vector<std::string>> test_subsets(
    const DatasetManifest& manifest) {
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (const SampleRecord* r : manifest.records_in(Split::kTest)) {
    (r->sex == Sex::kMale ? out.first : out.second).push_back(r->sample_id);
  }
  return out;
}

Eigen::MatrixXd target_matrix(const std::vector<const SampleRecord*>& records) {
  Eigen::MatrixXd t(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(kNumMeasurements));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto v = records[i]->measurements.to_vector();
    for (std::size_t j = 0; j < kNumMeasurements; ++j) t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  return t;
}

}  // namespace bm
