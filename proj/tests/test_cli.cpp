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

#include <cstdlib>
#include <nlohmann/json.hpp>
#include <sstream>

#include "bodymeasure/pipeline.hpp"
#include "support.hpp"

using namespace bm;
using bm::testing::TempDir;
using nlohmann::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Outcome gen_small(const std::filesystem::path& dir, int n = 10, const std::string& seed = "3") {
  return run({"gen", "--n-per-sex", std::to_string(n), "--resolution", "32", "--seed", seed, "--out",
              dir.string()});
}

void write_json(const std::filesystem::path& p, const json& j) { std::ofstream(p) << j.dump(); }

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~ScopedEnv() { ::unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST_CASE("help exits cleanly") {
  const Outcome r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("gen") != std::string::npos);
  CHECK(run({"train", "--help"}).code == 0);
}

TEST_CASE("the example pipeline config parses") {
  const PipelineConfig cfg = load_pipeline_config(std::filesystem::path(BM_SOURCE_DIR) / "config" / "pipeline.example.json");
  CHECK(cfg.seed == 7);
  CHECK(cfg.backbone.feature_dim == 3136);
  CHECK(cfg.train.batch_size == 32);
  CHECK(cfg.render.px_per_cm == 1.15);
  CHECK(cfg.ranges_file->filename() == "body_ranges.v1.json");
  CHECK(cfg.dataset.lexically_normal().filename() == "data");
}

TEST_CASE("usage errors exit 2 with a one-line report") {
  const Outcome none = run({});
  CHECK(none.code == 2);
  CHECK(none.err.rfind("error=usage_error exit=2 message=\"", 0) == 0);
  CHECK(std::count(none.err.begin(), none.err.end(), '\n') == 1);
  CHECK(run({"gen", "--n-per-sex", "many"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"screen", "--measurements", "x.json", "--sex", "male", "--format", "xml"}).code == 2);
}

TEST_CASE("gen is reproducible byte for byte") {
  TempDir tmp;
  REQUIRE(gen_small(tmp / "a").code == 0);
  REQUIRE(gen_small(tmp / "b").code == 0);
  CHECK(bm::testing::tree_contents(tmp / "a") == bm::testing::tree_contents(tmp / "b"));
  CHECK(std::filesystem::exists(tmp / "a" / "provenance.json"));
  CHECK(std::filesystem::exists(tmp / "a" / "manifest.header.json"));
  for (const auto& entry : std::filesystem::directory_iterator(tmp.path()))
    CHECK(entry.path().extension() != ".partial");

  REQUIRE(gen_small(tmp / "c", 10, "4").code == 0);
  CHECK(bm::testing::tree_contents(tmp / "a") != bm::testing::tree_contents(tmp / "c"));
}

TEST_CASE("configuration errors exit 2") {
  TempDir tmp;
  const Outcome zero = gen_small(tmp / "z", 0);
  CHECK(zero.code == 2);
  CHECK(zero.err.rfind("error=config_error exit=2", 0) == 0);

  write_json(tmp / "bad.json", {{"dataset", "d"}, {"optimiser", "sgd"}});
  CHECK(run({"split", "--config", (tmp / "bad.json").string()}).code == 2);
  CHECK(run({"split", "--config", (tmp / "missing.json").string()}).code == 2);

  write_json(tmp / "ranges_ref.json", {{"ranges", "nope.json"}});
  CHECK(run({"gen", "--config", (tmp / "ranges_ref.json").string(), "--out", (tmp / "o").string()}).code == 2);

  CHECK(run({"train", "--dataset", (tmp / "d").string(), "--out", (tmp / "m").string(), "--backbone",
             "resnet50"})
            .code == 2);
  {
    ScopedEnv env(kDeviceEnv, "cuda");
    const Outcome r = gen_small(tmp / "g");
    CHECK(r.code == 2);
    CHECK(r.err.find("cuda") != std::string::npos);
  }
  ScopedEnv env(kDeviceEnv, "cpu");
  CHECK(gen_small(tmp / "g", 2).code == 0);
}

TEST_CASE("missing inputs exit 5, bad data exits 3") {
  TempDir tmp;
  const Outcome r = run({"split", "--dataset", (tmp / "absent").string()});
  CHECK(r.code == 5);
  CHECK(r.err.rfind("error=io_error exit=5", 0) == 0);

  REQUIRE(gen_small(tmp / "d", 4).code == 0);
  const Outcome unsplit = run({"train", "--dataset", (tmp / "d").string(), "--out", (tmp / "m").string()});
  CHECK(unsplit.code == 3);
  CHECK(unsplit.err.find("state_error") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(tmp / "m"));

  std::ofstream(tmp / "broken.json") << "{not json";
  CHECK(run({"screen", "--measurements", (tmp / "broken.json").string(), "--sex", "male"}).code == 3);
  write_json(tmp / "partial.json", {{"waist_circumference", 90.0}});
  const Outcome missing = run({"screen", "--measurements", (tmp / "partial.json").string(), "--sex", "male"});
  CHECK(missing.code == 3);
  CHECK(missing.err.find("missing measurement") != std::string::npos);
}

TEST_CASE("perfect stub evaluates to zero error") {
  TempDir tmp;
  REQUIRE(gen_small(tmp / "d", 20).code == 0);
  REQUIRE(run({"split", "--dataset", (tmp / "d").string(), "--seed", "1"}).code == 0);
  const Outcome r = run({"eval", "--dataset", (tmp / "d").string(), "--stub", "perfect", "--out",
                         (tmp / "eval").string()});
  REQUIRE(r.code == 0);
  const std::string csv = bm::testing::slurp(tmp / "eval" / "eval.csv");
  CHECK(csv.find("waist_circumference,0.000000,0.000000,0.000000") != std::string::npos);
  CHECK(csv.find("mean,0.000000,0.000000,0.000000") != std::string::npos);
  CHECK(std::filesystem::exists(tmp / "eval" / "provenance.json"));
  CHECK(r.out.find("Mean MAE") != std::string::npos);

  CHECK(run({"eval", "--dataset", (tmp / "d").string(), "--stub", "train-mean"}).code == 0);
  CHECK(run({"eval", "--dataset", (tmp / "d").string(), "--stub", "oracle"}).code == 2);
  CHECK(run({"eval", "--dataset", (tmp / "d").string()}).code == 2);
}

TEST_CASE("train, predict and screen end to end") {
  TempDir tmp;
  const std::string data = (tmp / "d").string();
  REQUIRE(gen_small(tmp / "d", 10).code == 0);
  REQUIRE(run({"split", "--dataset", data, "--seed", "2"}).code == 0);
  const Outcome trained = run({"train", "--dataset", data, "--out", (tmp / "ckpt").string(), "--batch-size", "8",
                               "--max-epochs", "2", "--seed", "5"});
  REQUIRE_MESSAGE(trained.code == 0, trained.err);
  for (const char* f : {"weights.bin", "model_card.json", "history.csv", "provenance.json"})
    CHECK(std::filesystem::exists(tmp / "ckpt" / f));
  const std::string history = bm::testing::slurp(tmp / "ckpt" / "history.csv");
  CHECK(std::count(history.begin(), history.end(), '\n') == 3);

  // Retraining with the same seed reproduces the weights.
  REQUIRE(run({"train", "--dataset", data, "--out", (tmp / "ckpt2").string(), "--batch-size", "8",
               "--max-epochs", "2", "--seed", "5"})
              .code == 0);
  CHECK(bm::testing::slurp(tmp / "ckpt" / "weights.bin") == bm::testing::slurp(tmp / "ckpt2" / "weights.bin"));

  CHECK(run({"eval", "--dataset", data, "--checkpoint", (tmp / "ckpt").string()}).code == 0);

  const json header = json::parse(bm::testing::slurp(tmp / "d" / "manifest.records.jsonl").substr(
      0, bm::testing::slurp(tmp / "d" / "manifest.records.jsonl").find('\n')));
  const std::string image = (tmp / "d" / header.at("image_path").get<std::string>()).string();
  const Outcome predicted = run({"predict", "--checkpoint", (tmp / "ckpt").string(), "--image", image, "--out",
                                 (tmp / "pred.json").string()});
  REQUIRE_MESSAGE(predicted.code == 0, predicted.err);
  const json pred = json::parse(predicted.out);
  CHECK(pred["measurements"].size() == 16);

  const Outcome screened = run({"screen", "--measurements", (tmp / "pred.json").string(), "--sex", "male",
                                "--format", "json"});
  REQUIRE_MESSAGE(screened.code == 0, screened.err);
  CHECK(json::parse(screened.out).contains("waist_class"));
}

TEST_CASE("screen classifies a flat measurement file") {
  TempDir tmp;
  write_json(tmp / "m.json", {{"waist_circumference", 95.0},
                              {"pelvis_circumference", 100.0},
                              {"shoulder_to_wrist", 60.0},
                              {"leg_length", 85.0},
                              {"torso_length", 55.0}});
  const Outcome r = run({"screen", "--measurements", (tmp / "m.json").string(), "--sex", "male", "--format",
                         "json", "--out", (tmp / "s.json").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const json doc = json::parse(r.out);
  CHECK(doc["waist_class"] == "increased");
  CHECK(doc["whr_class"] == "increased");
  CHECK(doc["marfanoid_flags"]["arm_torso"] == "not assessed");
  CHECK(json::parse(bm::testing::slurp(tmp / "s.json")) == doc);

  write_json(tmp / "t.json", {{"arm_torso_max", 1.0}, {"leg_torso_max", 2.0}});
  const Outcome flagged = run({"screen", "--measurements", (tmp / "m.json").string(), "--sex", "male",
                               "--thresholds", (tmp / "t.json").string(), "--format", "json"});
  REQUIRE(flagged.code == 0);
  CHECK(json::parse(flagged.out)["marfanoid_flags"]["arm_torso"] == true);

  const Outcome text = run({"screen", "--measurements", (tmp / "m.json").string(), "--sex", "female"});
  CHECK(text.code == 0);
  CHECK(text.out.find("high") != std::string::npos);
  CHECK(run({"screen", "--measurements", (tmp / "m.json").string(), "--sex", "other"}).code == 2);
}

TEST_CASE("a runaway learning rate reports divergence") {
  TempDir tmp;
  const std::string data = (tmp / "d").string();
  REQUIRE(gen_small(tmp / "d", 10).code == 0);
  REQUIRE(run({"split", "--dataset", data}).code == 0);
  const Outcome r = run({"train", "--dataset", data, "--out", (tmp / "ckpt").string(), "--learning-rate", "1e30",
                         "--batch-size", "4", "--max-epochs", "5"});
  CHECK(r.code == 4);
  CHECK(r.err.rfind("error=divergence exit=4", 0) == 0);
  CHECK_FALSE(std::filesystem::exists(tmp / "ckpt"));
}
