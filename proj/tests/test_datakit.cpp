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

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "bodymeasure/datakit.hpp"
#include "bodymeasure/errors.hpp"
#include "bodymeasure/rng.hpp"
#include "support.hpp"

using namespace bm;
using bm::testing::TempDir;

namespace {

// Records with random measurements and no images.
DatasetManifest synthetic_manifest(int n_per_sex, std::uint64_t seed) {
  DatasetManifest m;
  Rng rng(seed);
  for (Sex sex : {Sex::kMale, Sex::kFemale}) {
    for (int i = 0; i < n_per_sex; ++i) {
      SampleRecord r;
      r.sex = sex;
      r.sample_id = sample_id(sex, i);
      r.image_path = "images/" + std::string(to_string(sex)) + "/" + r.sample_id + ".png";
      r.spec_seed = sample_seed(seed, sex, i);
      std::array<double, kNumMeasurements> v{};
      for (double& x : v) x = rng.uniform(10.0, 120.0);
      r.measurements = MeasurementSet::from_vector(v);
      m.records.push_back(r);
    }
  }
  m.config_digest = "synthetic";
  m.master_seed = seed;
  return m;
}

std::size_t count(const DatasetManifest& m, Split s, Sex sex) {
  const auto rs = m.records_in(s);
  return static_cast<std::size_t>(std::count_if(rs.begin(), rs.end(), [&](auto* r) { return r->sex == sex; }));
}

GenerationRequest small_request(int n, std::uint64_t seed) {
  GenerationRequest req;
  req.n_per_sex = n;
  req.resolution = 24;
  req.master_seed = seed;
  return req;
}

}  // namespace

TEST_CASE("1000-sample balanced split is 700/150/150") {
  const DatasetManifest m = split_dataset(synthetic_manifest(500, 1), {}, 42);
  CHECK(m.records_in(Split::kTrain).size() == 700);
  CHECK(m.records_in(Split::kVal).size() == 150);
  CHECK(m.records_in(Split::kTest).size() == 150);
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    CHECK(count(m, s, Sex::kMale) == count(m, s, Sex::kFemale));
  }
  CHECK(m.is_split());
  CHECK(m.shuffle_seed == 42u);
}

TEST_CASE("split is deterministic in its seed") {
  const DatasetManifest base = synthetic_manifest(50, 3);
  CHECK(split_dataset(base, {}, 9).split == split_dataset(base, {}, 9).split);
  CHECK(split_dataset(base, {}, 9).split != split_dataset(base, {}, 10).split);
}

TEST_CASE("split fractions must sum to one") {
  CHECK_THROWS_AS(split_dataset(synthetic_manifest(10, 1), {0.7, 0.2, 0.2}, 1), ConfigError);
  CHECK_THROWS_AS(split_dataset(synthetic_manifest(10, 1), {1.1, -0.05, -0.05}, 1), ConfigError);
}

TEST_CASE("rounding remainders go to train") {
  const DatasetManifest m = split_dataset(synthetic_manifest(7, 1), {}, 5);
  CHECK(count(m, Split::kTrain, Sex::kMale) == 5);
  CHECK(count(m, Split::kVal, Sex::kMale) == 1);
  CHECK(count(m, Split::kTest, Sex::kFemale) == 1);
}

TEST_CASE("split is a sex-balanced partition for random sizes and seeds") {
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(120));
    const DatasetManifest m = split_dataset(synthetic_manifest(n, trial), {}, rng.below(1000));
    CHECK(m.split.size() == m.records.size());
    std::size_t total = 0;
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
      total += m.records_in(s).size();
      const auto male = static_cast<long>(count(m, s, Sex::kMale));
      const auto female = static_cast<long>(count(m, s, Sex::kFemale));
      CHECK(std::abs(male - female) <= 1);
    }
    CHECK(total == m.records.size());

    const auto [male_ids, female_ids] = test_subsets(m);
    std::set<std::string> joined(male_ids.begin(), male_ids.end());
    joined.insert(female_ids.begin(), female_ids.end());
    CHECK(joined.size() == male_ids.size() + female_ids.size());
    std::set<std::string> test_ids;
    for (auto* r : m.records_in(Split::kTest)) test_ids.insert(r->sample_id);
    CHECK(joined == test_ids);
  }
}

TEST_CASE("test subsets") {
  const DatasetManifest m = split_dataset(synthetic_manifest(500, 2), {}, 1);
  const auto [male, female] = test_subsets(m);
  CHECK(male.size() == 75);
  CHECK(female.size() == 75);
  for (const auto& id : male) CHECK(m.record(id).sex == Sex::kMale);
  for (const auto& id : female) CHECK(m.record(id).sex == Sex::kFemale);

  const DatasetManifest no_test = split_dataset(synthetic_manifest(20, 2), {0.85, 0.15, 0.0}, 1);
  const auto [m0, f0] = test_subsets(no_test);
  CHECK(m0.empty());
  CHECK(f0.empty());

  CHECK_THROWS_AS(test_subsets(synthetic_manifest(5, 1)), StateError);
  CHECK_THROWS_AS(m.record("nobody"), LookupError);
}

TEST_CASE("manifest round trip") {
  TempDir dir;
  DatasetManifest m = synthetic_manifest(6, 4);
  m.generation = {{"n_per_sex", 6}, {"nested", {{"a", 1.5}}}};
  write_manifest(m, dir.path());
  CHECK(read_manifest(dir.path()) == m);

  m = split_dataset(m, {}, 8);
  write_manifest(m, dir.path());
  const DatasetManifest back = read_manifest(dir.path());
  CHECK(back == m);
  CHECK(back.fractions == SplitFractions{});
}

TEST_CASE("malformed or missing manifests") {
  TempDir dir;
  CHECK_THROWS_AS(read_manifest(dir.path()), IoError);
  write_manifest(synthetic_manifest(2, 1), dir.path());
  {
    std::ofstream out(dir / std::string(kManifestRecords), std::ios::app);
    out << "{\"sample_id\": 3}\n";
  }
  CHECK_THROWS_AS(read_manifest(dir.path()), ValidationError);
}

TEST_CASE("target matrix follows the measurement order") {
  const DatasetManifest m = synthetic_manifest(3, 5);
  std::vector<const SampleRecord*> rs;
  for (const auto& r : m.records) rs.push_back(&r);
  const Eigen::MatrixXd t = target_matrix(rs);
  CHECK(t.rows() == 6);
  CHECK(t.cols() == static_cast<Eigen::Index>(kNumMeasurements));
  CHECK(t(4, 2) == m.records[4].measurements.at(kMeasurementNames[2]));
}

TEST_CASE("generate_dataset writes images and a manifest") {
  TempDir dir;
  const DatasetManifest m = generate_dataset(small_request(10, 3), dir / "data");
  CHECK(m.records.size() == 20);
  CHECK(std::count_if(m.records.begin(), m.records.end(), [](const auto& r) { return r.sex == Sex::kMale; }) == 10);
  for (const auto& r : m.records) {
    CHECK(std::filesystem::exists(dir / "data" / r.image_path));
    CHECK(r.measurements.size() == kNumMeasurements);
    CHECK(r.spec_seed == sample_seed(3, r.sex, std::stoi(r.sample_id.substr(r.sample_id.find('_') + 1))));
  }
  CHECK(read_manifest(dir / "data") == m);
  CHECK(std::filesystem::exists(dir / "data" / std::string(kProvenanceFile)));
  CHECK(m.config_digest == generation_digest(small_request(10, 3)));
  CHECK_FALSE(std::filesystem::exists(dir / "data.partial"));
}

TEST_CASE("generation is byte-for-byte reproducible") {
  TempDir dir;
  generate_dataset(small_request(4, 11), dir / "a");
  generate_dataset(small_request(4, 11), dir / "b");
  generate_dataset(small_request(4, 12), dir / "c");
  CHECK(bm::testing::tree_contents(dir / "a") == bm::testing::tree_contents(dir / "b"));
  CHECK(bm::testing::tree_contents(dir / "a") != bm::testing::tree_contents(dir / "c"));
}

TEST_CASE("generation argument errors") {
  TempDir dir;
  CHECK_THROWS_AS(generate_dataset(small_request(0, 1), dir / "x"), ConfigError);
  std::filesystem::create_directories(dir / "full");
  std::ofstream(dir / "full" / "keep.txt") << "x";
  CHECK_THROWS_AS(generate_dataset(small_request(1, 1), dir / "full"), IoError);
}

TEST_CASE("the config digest ignores the seed but not the config") {
  GenerationRequest a = small_request(4, 1), b = small_request(4, 2), c = small_request(5, 1);
  CHECK(generation_digest(a) == generation_digest(b));
  CHECK(generation_digest(a) != generation_digest(c));
  CHECK(generation_digest(a).size() == 64);
}
