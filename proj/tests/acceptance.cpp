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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include <fmt/core.h>

#include "bodymeasure/bodygen.hpp"
#include "bodymeasure/datakit.hpp"
#include "bodymeasure/measure.hpp"
#include "bodymeasure/pipeline.hpp"
#include "bodymeasure/primitives.hpp"
#include "bodymeasure/regressor.hpp"
#include "bodymeasure/rng.hpp"
#include "bodymeasure/screening.hpp"
#include "support.hpp"

using namespace bm;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Result {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // <= 0: no runtime bound
  std::function<Result()> run;
};

// Evaluation runs collected for the decomposition check.
std::vector<EvalReport> g_reports;

Eigen::MatrixXd random_targets(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd t(n, static_cast<Eigen::Index>(kNumMeasurements));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(20.0, 110.0);
  return t;
}

DatasetManifest balanced_manifest(int n_per_sex, std::uint64_t seed) {
  DatasetManifest m;
  Rng rng(seed);
  for (Sex sex : {Sex::kMale, Sex::kFemale})
    for (int i = 0; i < n_per_sex; ++i) {
      SampleRecord r;
      r.sex = sex;
      r.sample_id = sample_id(sex, i);
      std::array<double, kNumMeasurements> v{};
      for (double& x : v) x = rng.uniform(20.0, 110.0);
      r.measurements = MeasurementSet::from_vector(v);
      m.records.push_back(r);
    }
  return m;
}

Result report_format() {
  const DatasetManifest m = split_dataset(balanced_manifest(50, 1), {}, 1);
  const EvalReport r = evaluate_model(ConstantPredictor::train_mean(m), m, {});
  g_reports.push_back(r);
  bool ok = r.rows.size() == 5;
  const std::vector<std::string> labels = {"Waist circumference", "Pelvis circumference", "Arm length",
                                           "Leg length", "Torso length"};
  for (std::size_t i = 0; ok && i < 5; ++i) ok = r.rows[i].label == labels[i];

  const std::string csv = format_eval_csv(r);
  std::istringstream lines(csv);
  std::string line;
  int n_lines = 0;
  while (std::getline(lines, line)) {
    ++n_lines;
    ok = ok && std::count(line.begin(), line.end(), ',') == 3;
  }
  ok = ok && n_lines == 7 && csv.find("\nmean,") != std::string::npos;
  const std::string table = format_eval_table(r);
  ok = ok && table.find("Male") != std::string::npos && table.find("Female") != std::string::npos &&
       table.find("Total") != std::string::npos && table.find("Mean MAE") != std::string::npos;

  // The mean row reproduces the published per-sex means from the published rows.
  const std::array<double, 5> male = {1.178, 0.965, 0.366, 0.382, 0.434};
  const std::array<double, 5> female = {1.283, 0.933, 0.393, 0.354, 0.367};
  const Eigen::MatrixXd tm = random_targets(20, 2), tf = random_targets(20, 3);
  Eigen::MatrixXd pm = tm, pf = tf;
  for (std::size_t i = 0; i < 5; ++i) {
    const int col = measurement_index(kReportedMeasurements[i]);
    pm.col(col).array() += male[i];
    pf.col(col).array() += female[i];
  }
  const EvalReport pub = evaluate_predictions("resnet50", pm, tm, pf, tf);
  const bool means = std::abs(pub.mean.male - 0.665) < 5e-4 && std::abs(pub.mean.female - 0.666) < 5e-4;
  return {ok && means, fmt::format("5 rows x male/female/total + mean row; published mean row {:.3f}/{:.3f}",
                                   pub.mean.male, pub.mean.female)};
}

Result geometry_oracle() {
  const double r = 10.0;
  const double c = circumference_at(primitives::cylinder(r, 0.0, 100.0, 256), 50.0);
  TriangleMesh two = primitives::cylinder(5.0, 0.0, 10.0, 256, -10.0, 0.0);
  two.append(primitives::cylinder(5.0, 0.0, 10.0, 256, 10.0, 0.0));
  const double expected = 2 * kPi * 5.0 + 2 * 20.0;
  const double h = circumference_at(two, 5.0);
  const bool ok = std::abs(c - 62.829) <= 0.06 && std::abs(h - expected) <= 1e-3 * expected;
  return {ok, fmt::format("cylinder {:.4f} cm, two cylinders {:.4f} cm (expected {:.4f})", c, h, expected)};
}

Result construction_equivalence() {
  const int n = 200;
  double worst_girth = 0.0, worst_length = 0.0;
  std::vector<BodySpec> specs;
  for (int i = 0; i < n; ++i)
    specs.push_back(sample_body_spec(i % 2 ? Sex::kFemale : Sex::kMale, derive_seed(2024, i),
                                     default_generation_ranges()));
  std::vector<double> girth(n), length(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const BodySpec& s = specs[static_cast<std::size_t>(i)];
    const MeasurementSet m = measure_all(build_body(s, 256));
    girth[i] = std::max(std::abs(m.at("waist_circumference") - s.waist_circ) / s.waist_circ,
                        std::abs(m.at("pelvis_circumference") - s.pelvis_circ) / s.pelvis_circ);
    length[i] = std::max({std::abs(m.at("shoulder_to_wrist") - s.arm_len), std::abs(m.at("leg_length") - s.leg_len),
                          std::abs(m.at("torso_length") - s.torso_len)});
  }
  worst_girth = *std::max_element(girth.begin(), girth.end());
  worst_length = *std::max_element(length.begin(), length.end());
  return {worst_girth <= 0.01 && worst_length <= 1e-3,
          fmt::format("{} bodies; worst girth error {:.4f}%, worst length error {:.2e} cm", n,
                      100 * worst_girth, worst_length)};
}

Result split_protocol() {
  const DatasetManifest base = balanced_manifest(500, 3);
  const DatasetManifest a = split_dataset(base, {}, 42);
  const DatasetManifest b = split_dataset(base, {}, 42);
  bool ok = a.split == b.split;
  std::string counts;
  std::size_t total = 0;
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto recs = a.records_in(s);
    const auto males = std::count_if(recs.begin(), recs.end(), [](auto* r) { return r->sex == Sex::kMale; });
    const auto females = static_cast<long>(recs.size()) - males;
    ok = ok && std::abs(males - females) <= 1;
    total += recs.size();
    counts += fmt::format("{}{}", counts.empty() ? "" : "/", recs.size());
  }
  ok = ok && counts == "700/150/150" && total == 1000 && a.split.size() == 1000;
  for (const SampleRecord& r : base.records) ok = ok && a.split.contains(r.sample_id);
  return {ok, "split " + counts + ", sex-balanced, repeatable, partition"};
}

Result model_contract() {
  BackboneConfig bc = BackboneConfig::preset("tiny_test");
  Model model = build_model(bc, HeadConfig{}, 1);
  std::vector<ModelInput> inputs(4);
  Rng rng(5);
  for (ModelInput& in : inputs)
    for (float& v : in.data) v = static_cast<float>(rng.uniform(-2.0, 2.0));
  const Matrix out = model.predict_batch(inputs);
  bool ok = out.rows() == 4 && out.cols() == 16;

  auto snap = [](const std::vector<ParameterRef>& ps) {
    std::vector<std::vector<float>> s;
    for (const auto& p : ps) s.emplace_back(p.values.begin(), p.values.end());
    return s;
  };
  const auto backbone_before = snap(model.backbone_parameters());
  const auto head_before = snap(model.trainable_parameters());
  Trainer trainer(model, TrainConfig{});
  trainer.step(model.extract_features(inputs), random_targets(4, 6));
  ok = ok && snap(model.backbone_parameters()) == backbone_before;

  // Every head layer (dense1..3 with their norms, output) must have moved.
  const auto params = model.trainable_parameters();
  const auto head_after = snap(params);
  std::map<std::string, bool> layer_changed;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params[i].name;
    const std::string layer = name.substr(0, name.rfind('/'));
    layer_changed[layer] = layer_changed[layer] || head_after[i] != head_before[i];
  }
  for (const auto& [layer, changed] : layer_changed) ok = ok && changed;
  return {ok, fmt::format("output {}x{}; backbone unchanged; {} head layers all updated", out.rows(), out.cols(),
                          layer_changed.size())};
}

Result learning_sanity() {
  bm::testing::TempDir tmp;
  GenerationRequest req;
  req.n_per_sex = 256;
  req.resolution = 128;
  req.master_seed = 7;
  const fs::path root = tmp / "data";
  generate_dataset(req, root);
  const DatasetManifest m = split_dataset(read_manifest(root), {}, 7);
  write_manifest(m, root);

  BackboneConfig bc = BackboneConfig::preset("tiny_test");
  bc.seed = 7;
  Model model = build_model(bc, HeadConfig{}, 7);
  TrainConfig tc;
  tc.batch_size = 32;
  tc.max_epochs = 50;
  tc.learning_rate = 5e-4;
  tc.seed = 7;
  const TrainHistory h = train_model(model, examples_for(m, root, Split::kTrain, bc.normalization),
                                     examples_for(m, root, Split::kVal, bc.normalization), tc);

  const EvalReport trained = evaluate_model(ModelPredictor(model), m, root);
  const EvalReport baseline = evaluate_model(ConstantPredictor::train_mean(m), m, root);
  g_reports.push_back(trained);
  g_reports.push_back(baseline);

  // Closed-form baseline: the train mean of each measurement, scored on test.
  const auto train = m.records_in(Split::kTrain);
  const auto test = m.records_in(Split::kTest);
  double oracle_mean = 0.0;
  for (std::string_view name : kReportedMeasurements) {
    double mu = 0.0;
    for (auto* r : train) mu += r->measurements.at(name);
    mu /= static_cast<double>(train.size());
    double dev = 0.0;
    for (auto* r : test) dev += std::abs(r->measurements.at(name) - mu);
    oracle_mean += dev / static_cast<double>(test.size());
  }
  oracle_mean /= static_cast<double>(kReportedMeasurements.size());
  const bool oracle_ok = std::abs(oracle_mean - baseline.mean.total) <= 1e-9 * oracle_mean;

  const double ratio = trained.mean.total / oracle_mean;
  return {oracle_ok && ratio <= 0.6,
          fmt::format("test mean MAE {:.3f} cm vs train-mean baseline {:.3f} cm, ratio {:.3f} (<= 0.6); "
                      "{} epochs, best {}",
                      trained.mean.total, oracle_mean, ratio, h.stopped_epoch, h.best_epoch)};
}

Result early_stopping() {
  Model model = build_model(BackboneConfig::preset("tiny_test"), HeadConfig{}, 3);
  Rng rng(9);
  Matrix f(48, model.feature_dim());
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = static_cast<float>(rng.uniform());
  const Eigen::MatrixXd t = random_targets(48, 10);

  const std::vector<double> curve = {5.0, 4.0, 3.0, 2.0, 1.0};
  auto injected = [&](int epoch) { return epoch <= 5 ? curve[static_cast<std::size_t>(epoch - 1)] : 1.0; };
  std::vector<std::vector<DenseLayer>> snapshots;
  TrainHooks hooks;
  hooks.val_loss_override = [&](int epoch, double) { return injected(epoch); };
  hooks.on_epoch_end = [&](int, const Model& m) { snapshots.push_back(m.dense_layers()); };
  TrainConfig tc;
  tc.batch_size = 16;
  const TrainHistory h = train_on_features(model, f, t, f, t, tc, hooks);

  int restored = 0;
  for (std::size_t e = 0; e < snapshots.size(); ++e) {
    bool same = true;
    for (std::size_t l = 0; l < snapshots[e].size(); ++l)
      same = same && snapshots[e][l].weights == model.dense_layers()[l].weights &&
             snapshots[e][l].bias == model.dense_layers()[l].bias;
    if (same && restored == 0) restored = static_cast<int>(e) + 1;
  }
  const double minimum = *std::min_element(h.val_loss.begin(), h.val_loss.end());
  const bool ok = h.stopped_epoch == 15 && h.early_stopped && restored == 5 && injected(restored) == minimum &&
                  h.best_val_loss == minimum;
  return {ok, fmt::format("stopped at epoch {}; restored weights from epoch {} with val loss {} (minimum {})",
                          h.stopped_epoch, restored, restored ? injected(restored) : -1.0, minimum)};
}

Result screening_boundaries() {
  struct WaistCase {
    Sex sex;
    double waist;
    WaistClass expected;
  };
  const std::vector<WaistCase> waist = {
      {Sex::kMale, 93.9, WaistClass::kNormal},     {Sex::kMale, 94.0, WaistClass::kIncreased},
      {Sex::kMale, 101.9, WaistClass::kIncreased}, {Sex::kMale, 102.0, WaistClass::kHigh},
      {Sex::kFemale, 79.9, WaistClass::kNormal},   {Sex::kFemale, 80.0, WaistClass::kIncreased},
      {Sex::kFemale, 87.9, WaistClass::kIncreased}, {Sex::kFemale, 88.0, WaistClass::kHigh}};
  struct WhrCase {
    Sex sex;
    double whr;
    WhrClass expected;
  };
  const std::vector<WhrCase> whr = {{Sex::kMale, 0.90, WhrClass::kNormal},
                                    {Sex::kMale, 0.91, WhrClass::kIncreased},
                                    {Sex::kFemale, 0.85, WhrClass::kNormal},
                                    {Sex::kFemale, 0.86, WhrClass::kIncreased}};
  int correct = 0;
  for (const auto& c : waist) correct += classify_waist(c.sex, c.waist) == c.expected;
  for (const auto& c : whr) correct += classify_whr(c.sex, c.whr) == c.expected;
  return {correct == 12, fmt::format("{}/12 boundary cases", correct)};
}

Result mae_decomposition() {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int nm = 1 + static_cast<int>(rng.below(80)), nf = 1 + static_cast<int>(rng.below(80));
    EvalReport r = evaluate_predictions("random", random_targets(nm, 4 * trial), random_targets(nm, 4 * trial + 1),
                                        random_targets(nf, 4 * trial + 2), random_targets(nf, 4 * trial + 3));
    r.n_male = static_cast<std::size_t>(nm);
    r.n_female = static_cast<std::size_t>(nf);
    g_reports.push_back(r);
  }
  double worst = 0.0;
  for (const EvalReport& r : g_reports)
    for (const MaeRow& row : r.rows) {
      const double nm = static_cast<double>(r.n_male), nf = static_cast<double>(r.n_female);
      const double combined = (nm * row.male + nf * row.female) / (nm + nf);
      worst = std::max(worst, combined == 0.0 ? std::abs(row.total) : std::abs(row.total - combined) / combined);
    }
  return {worst <= 1e-9, fmt::format("{} evaluation runs; worst relative deviation {:.2e}", g_reports.size(), worst)};
}

Result end_to_end_determinism() {
  bm::testing::TempDir tmp;
  std::ostringstream sink;
  auto gen = [&](const fs::path& dir) {
    return run_cli({"gen", "--n-per-sex", "12", "--resolution", "64", "--seed", "99", "--out", dir.string()}, sink,
                   sink);
  };
  const int a = gen(tmp / "a"), b = gen(tmp / "b");
  const auto ta = bm::testing::tree_contents(tmp / "a");
  const bool same = a == 0 && b == 0 && ta == bm::testing::tree_contents(tmp / "b");
  return {same && ta.size() > 24, fmt::format("two gen runs, {} files each, byte-identical", ta.size())};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "evaluation report format", 0, report_format},
      {2, "geometry oracle", 1.0, geometry_oracle},
      {3, "construction vs extraction", 120.0, construction_equivalence},
      {4, "split protocol", 1.0, split_protocol},
      {5, "model contract", 60.0, model_contract},
      {6, "learning sanity", 900.0, learning_sanity},
      {7, "early stopping", 0, early_stopping},
      {8, "screening boundaries", 0, screening_boundaries},
      {9, "MAE decomposition", 0, mae_decomposition},
      {10, "end-to-end determinism", 0, end_to_end_determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt::format("{:.2f} s", secs);
    if (c.budget_s > 0) {
      timing += fmt::format(" of {:.0f} s", c.budget_s);
      if (secs > c.budget_s) r.pass = false;
    }
    failures += !r.pass;
    std::cout << fmt::format("criterion {:>2} {} {}: {} [{}]", c.id, r.pass ? "PASS" : "FAIL", c.name, r.detail,
                             timing)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failures, criteria.size()) << std::endl;
  return failures == 0 ? 0 : 1;
}
