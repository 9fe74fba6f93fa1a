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

#include "bodymeasure/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <ostream>

#include "bodymeasure/digest.hpp"
#include "bodymeasure/errors.hpp"

namespace bm {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

void require_file(const fs::path& p, std::string_view what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec))
    throw ConfigError(fmt::format("{} not found: {}", what, p.string()));
}

// Builds `final_dir` in a sibling ".partial" directory and renames it into
// place once `fill` returns.
template <typename Fill>
void promote_directory(const fs::path& final_dir, Fill&& fill) {
  std::error_code ec;
  if (fs::exists(final_dir, ec) && !fs::is_empty(final_dir, ec))
    throw IoError("output directory is not empty: " + final_dir.string());
  fs::path staging = final_dir;
  staging += ".partial";
  fs::remove_all(staging, ec);
  fs::create_directories(staging, ec);
  if (ec) throw IoError("cannot create " + staging.string() + ": " + ec.message());
  fill(staging);
  if (fs::exists(final_dir, ec)) fs::remove(final_dir, ec);
  fs::rename(staging, final_dir, ec);
  if (ec) throw IoError("cannot move " + staging.string() + " to " + final_dir.string());
}

void check_device() {
  const char* device = std::getenv(kDeviceEnv);
  if (device != nullptr && *device != '\0' && std::string_view(device) != "cpu")
    throw ConfigError(fmt::format("unsupported compute device '{}' (only cpu is available)", device));
}

MeasurementSet measurements_from_json(const json& doc) {
  const json& values = doc.contains("measurements") ? doc.at("measurements") : doc;
  if (!values.is_object()) throw ValidationError("measurements must be a JSON object");
  MeasurementSet set;
  for (const auto& [name, value] : values.items()) {
    if (!value.is_number()) throw ValidationError(fmt::format("measurement {} is not a number", name));
    set.set(name, value.get<double>());
  }
  return set;
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string dataset;
  std::optional<int> n_per_sex;
  std::optional<int> resolution;
  std::string backbone;
  std::optional<int> batch_size;
  std::optional<int> max_epochs;
  std::optional<double> learning_rate;
  std::string checkpoint;
  std::string stub;
  std::string image;
  std::string measurements;
  std::string sex;
  std::string thresholds;
  std::string format = "text";
};

PipelineConfig effective_config(const Options& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_pipeline_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (o.n_per_sex) cfg.n_per_sex = *o.n_per_sex;
  if (o.resolution) cfg.resolution = *o.resolution;
  if (!o.backbone.empty()) {
    const Normalization norm = cfg.backbone.normalization;
    cfg.backbone = BackboneConfig::preset(o.backbone);
    cfg.backbone.normalization = norm;
  }
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.max_epochs) cfg.train.max_epochs = *o.max_epochs;
  if (o.learning_rate) cfg.train.learning_rate = *o.learning_rate;
  return cfg;
}

fs::path required_path(const fs::path& p, std::string_view flag) {
  if (p.empty()) throw ConfigError(fmt::format("{} is required", flag));
  return p;
}

int cmd_gen(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = effective_config(o);
  GenerationRequest req;
  req.n_per_sex = cfg.n_per_sex;
  req.ranges = cfg.ranges;
  req.render = cfg.render;
  req.measure = cfg.measure;
  req.resolution = cfg.resolution;
  req.master_seed = cfg.seed;
  const fs::path dir = required_path(cfg.out, "--out");
  const DatasetManifest m = generate_dataset(req, dir);
  out << fmt::format("generated {} samples into {} (digest {})\n", m.records.size(), dir.string(),
                     m.config_digest);
  return kExitOk;
}

int cmd_split(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = effective_config(o);
  const fs::path root = required_path(cfg.dataset, "--dataset");
  DatasetManifest m = split_dataset(read_manifest(root), cfg.fractions, cfg.seed);
  write_manifest(m, root);
  write_provenance(root, "dataset", m.config_digest, m.master_seed,
                   {{"split_seed", cfg.seed},
                    {"split_fractions", {cfg.fractions.train, cfg.fractions.val, cfg.fractions.test}}});
  out << fmt::format("split {}: train {}, val {}, test {}\n", root.string(),
                     m.records_in(Split::kTrain).size(), m.records_in(Split::kVal).size(),
                     m.records_in(Split::kTest).size());
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  PipelineConfig cfg = effective_config(o);
  const fs::path root = required_path(cfg.dataset, "--dataset");
  const fs::path dir = required_path(cfg.out, "--out");
  cfg.train.seed = cfg.seed;
  cfg.backbone.seed = cfg.seed;
  cfg.train.validate();

  Model model = build_model(cfg.backbone, cfg.head, cfg.seed);
  const DatasetManifest manifest = read_manifest(root);
  if (!manifest.is_split()) throw StateError("dataset has not been split; run split first");
  const ExampleSet train = examples_for(manifest, root, Split::kTrain, cfg.backbone.normalization);
  const ExampleSet val = examples_for(manifest, root, Split::kVal, cfg.backbone.normalization);
  const TrainHistory history = train_model(model, train, val, cfg.train);

  const json training = {{"backbone", cfg.backbone},
                         {"head", cfg.head},
                         {"train", cfg.train},
                         {"dataset_digest", manifest.config_digest},
                         {"dataset_seed", manifest.master_seed},
                         {"split_seed", manifest.shuffle_seed.value_or(0)}};
  const std::string digest = sha256_hex(training.dump());
  json card = {{"train", cfg.train},
               {"seed", cfg.seed},
               {"best_epoch", history.best_epoch},
               {"best_val_loss", history.best_val_loss},
               {"stopped_epoch", history.stopped_epoch},
               {"early_stopped", history.early_stopped},
               {"dataset_digest", manifest.config_digest},
               {"outputs", kMeasurementNames}};

  promote_directory(dir, [&](const fs::path& staging) {
    save_checkpoint(model, staging, card);
    std::string csv = "epoch,train_mae_cm,val_mae_cm\n";
    for (std::size_t e = 0; e < history.train_loss.size(); ++e)
      csv += fmt::format("{},{:.6f},{:.6f}\n", e + 1, history.train_loss[e], history.val_loss[e]);
    write_text_atomic(staging / "history.csv", csv);
    write_provenance(staging, "checkpoint", digest, cfg.seed, {{"training", training}});
  });
  out << fmt::format("trained {} for {} epochs; best epoch {} (val MAE {:.4f} cm)\n",
                     cfg.backbone.name, history.stopped_epoch, history.best_epoch,
                     history.best_val_loss);
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = effective_config(o);
  const fs::path root = required_path(cfg.dataset, "--dataset");
  const DatasetManifest manifest = read_manifest(root);
  if (o.checkpoint.empty() == o.stub.empty())
    throw ConfigError("exactly one of --checkpoint and --stub is required");

  EvalReport report;
  std::string source;
  if (!o.stub.empty()) {
    if (o.stub == "perfect") {
      report = evaluate_model(PerfectPredictor{}, manifest, root);
    } else if (o.stub == "train-mean") {
      report = evaluate_model(ConstantPredictor::train_mean(manifest), manifest, root);
    } else {
      throw ConfigError("unknown stub '" + o.stub + "' (perfect, train-mean)");
    }
    source = "stub:" + o.stub;
  } else {
    const Model model = load_checkpoint(o.checkpoint);
    report = evaluate_model(ModelPredictor(model), manifest, root);
    source = read_text(fs::path(o.checkpoint) / kProvenanceFile);
  }
  const std::string table = format_eval_table(report);
  out << table;
  if (!cfg.out.empty()) {
    const std::string digest =
        sha256_hex(json{{"source", source}, {"dataset_digest", manifest.config_digest}}.dump());
    promote_directory(cfg.out, [&](const fs::path& staging) {
      write_text_atomic(staging / "eval.csv", format_eval_csv(report));
      write_text_atomic(staging / "eval.txt", table);
      write_provenance(staging, "evaluation", digest, manifest.master_seed,
                       {{"model", report.model_name}});
    });
  }
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (o.image.empty()) throw ConfigError("--image is required");
  const Model model = load_checkpoint(o.checkpoint);
  const ModelInput input = to_model_input(read_png(o.image), model.backbone_config().normalization);
  const Matrix row = model.predict_batch(std::span<const ModelInput>(&input, 1));
  json doc;
  doc["image"] = o.image;
  doc["model"] = model.backbone_config().name;
  json values = json::object();
  for (std::size_t i = 0; i < kNumMeasurements; ++i)
    values[std::string(kMeasurementNames[i])] = static_cast<double>(row(0, static_cast<Eigen::Index>(i)));
  doc["measurements"] = values;
  const std::string text = doc.dump(2) + "\n";
  if (!o.out.empty()) write_text_atomic(o.out, text);
  out << text;
  return kExitOk;
}

int cmd_screen(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = effective_config(o);
  if (o.measurements.empty()) throw ConfigError("--measurements is required");
  if (o.sex.empty()) throw ConfigError("--sex is required");
  Sex sex;
  try {
    sex = parse_sex(o.sex);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const ProportionThresholds thresholds =
      o.thresholds.empty() ? cfg.thresholds : load_thresholds(o.thresholds);
  json doc;
  try {
    doc = json::parse(read_text(o.measurements));
  } catch (const json::parse_error& e) {
    throw DecodeError(fmt::format("{}: {}", o.measurements, e.what()));
  }
  const ScreeningReport report = screen_subject(measurements_from_json(doc), sex, thresholds);
  const std::string json_text = to_json(report).dump(2) + "\n";
  if (!o.out.empty()) write_text_atomic(o.out, json_text);
  if (o.format == "json") {
    out << json_text;
  } else {
    out << format_screening_text(report);
  }
  return kExitOk;
}

int report_error(std::ostream& err, std::string_view error_class, int code, std::string_view message) {
  err << fmt::format("error={} exit={} message={}\n", error_class, code, json(std::string(message)).dump(-1, ' ', false, json::error_handler_t::replace));
  return code;
}

}  // namespace

PipelineConfig parse_pipeline_config(const json& j, const fs::path& base_dir) {
  static const std::set<std::string> kKeys = {
      "dataset", "out",     "seed",     "ranges", "generation", "render", "measure",
      "split",   "backbone", "head",    "train",  "thresholds"};
  if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  PipelineConfig cfg;
  try {
    if (j.contains("dataset")) cfg.dataset = resolve(base_dir, j.at("dataset").get<std::string>());
    if (j.contains("out")) cfg.out = resolve(base_dir, j.at("out").get<std::string>());
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("ranges")) {
      cfg.ranges_file = resolve(base_dir, j.at("ranges").get<std::string>());
      require_file(*cfg.ranges_file, "generation-range file");
      cfg.ranges = load_generation_ranges(*cfg.ranges_file);
    }
    if (j.contains("generation")) {
      const json& g = j.at("generation");
      cfg.n_per_sex = g.value("n_per_sex", cfg.n_per_sex);
      cfg.resolution = g.value("resolution", cfg.resolution);
    }
    if (j.contains("render")) cfg.render = j.at("render").get<RenderConfig>();
    if (j.contains("measure")) {
      const json& m = j.at("measure");
      cfg.measure.waist_region_fraction =
          m.value("waist_region_fraction", cfg.measure.waist_region_fraction);
      cfg.measure.levels = m.value("levels", cfg.measure.levels);
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      cfg.fractions = {s.value("train", 0.70), s.value("val", 0.15), s.value("test", 0.15)};
    }
    if (j.contains("backbone")) cfg.backbone = j.at("backbone").get<BackboneConfig>();
    if (j.contains("head")) cfg.head = j.at("head").get<HeadConfig>();
    if (j.contains("train")) cfg.train = j.at("train").get<TrainConfig>();
    if (j.contains("thresholds")) {
      const json& t = j.at("thresholds");
      if (t.is_string()) {
        const fs::path p = resolve(base_dir, t.get<std::string>());
        require_file(p, "thresholds file");
        cfg.thresholds = load_thresholds(p);
      } else {
        cfg.thresholds = parse_thresholds(t);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  cfg.backbone.validate();
  cfg.head.validate();
  cfg.train.validate();
  cfg.render.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  require_file(path, "config file");
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_pipeline_config(j, path.parent_path());
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic body measurement pipeline", "bodymeasure"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Pipeline config file (JSON)");
    cmd->add_option("--seed", o.seed, "Seed recorded into every artifact");
    cmd->add_option("--out", o.out, "Output path");
  };
  CLI::App* gen = app.add_subcommand("gen", "Generate a dataset of rendered bodies");
  common(gen);
  gen->add_option("--n-per-sex", o.n_per_sex, "Bodies per sex");
  gen->add_option("--resolution", o.resolution, "Mesh ring segments");

  CLI::App* split = app.add_subcommand("split", "Assign train/val/test splits");
  common(split);
  split->add_option("--dataset", o.dataset, "Dataset root");

  CLI::App* train = app.add_subcommand("train", "Train the regression head");
  common(train);
  train->add_option("--dataset", o.dataset, "Dataset root");
  train->add_option("--backbone", o.backbone, "vgg19, resnet50, densenet121 or tiny_test");
  train->add_option("--batch-size", o.batch_size, "Training batch size");
  train->add_option("--max-epochs", o.max_epochs, "Epoch limit");
  train->add_option("--learning-rate", o.learning_rate, "Adam learning rate");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate MAE on the test split");
  common(eval);
  eval->add_option("--dataset", o.dataset, "Dataset root");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
  eval->add_option("--stub", o.stub, "Reference predictor: perfect or train-mean");

  CLI::App* predict = app.add_subcommand("predict", "Predict measurements for one image");
  common(predict);
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
  predict->add_option("--image", o.image, "PNG silhouette");

  CLI::App* screen = app.add_subcommand("screen", "Screening report from measurements");
  common(screen);
  screen->add_option("--measurements", o.measurements, "Measurements JSON or predict output");
  screen->add_option("--sex", o.sex, "male or female");
  screen->add_option("--thresholds", o.thresholds, "Marfanoid ratio thresholds (JSON)");
  screen->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    return report_error(err, "usage_error", kExitConfig, e.what());
  }

  try {
    check_device();
    if (gen->parsed()) return cmd_gen(o, out);
    if (split->parsed()) return cmd_split(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (predict->parsed()) return cmd_predict(o, out);
    return cmd_screen(o, out);
  } catch (const Error& e) {
    return report_error(err, e.error_class(), static_cast<int>(e.category()), e.what());
  } catch (const json::exception& e) {
    return report_error(err, "data_error", kExitData, e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error(err, "io_error", kExitIo, e.what());
  } catch (const std::exception& e) {
    return report_error(err, "internal_error", kExitInternal, e.what());
  }
}

}  // namespace bm
