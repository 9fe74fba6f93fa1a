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
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bodymeasure/datakit.hpp"
#include "bodymeasure/imaging.hpp"
#include "bodymeasure/measure.hpp"

namespace bm {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A named view of one parameter tensor, flattened.
struct ParameterRef {
  std::string name;
  std::span<float> values;
};

// ---------------------------------------------------------------------------
// Configuration

inline constexpr std::array<std::string_view, 4> kBackboneNames = {"vgg19", "resnet50",
                                                                   "densenet121", "tiny_test"};

struct BackboneConfig {
  std::string name = "tiny_test";
  Normalization normalization;
  bool frozen = true;
  int feature_dim = 0;  // length of the flattened feature map
  std::uint64_t seed = 0;

  // Published flattened feature sizes for 224x224 inputs; unknown names
  // raise ConfigError.
  static BackboneConfig preset(std::string_view name);
  void validate() const;
};

struct HeadConfig {
  std::vector<int> hidden = {1024, 512, 128};
  std::string activation = "relu";  // "relu" or "tanh", applied after batch norm
  int outputs = static_cast<int>(kNumMeasurements);
  float bn_momentum = 0.99f;
  float bn_epsilon = 1e-3f;

  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int max_epochs = 100;
  int batch_size = 350;
  int patience = 10;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  bool shuffle = true;
  // Start the output bias at the per-measurement mean of the training targets.
  bool output_bias_from_targets = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const BackboneConfig& c);
void from_json(const nlohmann::json& j, BackboneConfig& c);
void to_json(nlohmann::json& j, const HeadConfig& c);
void from_json(const nlohmann::json& j, HeadConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// ---------------------------------------------------------------------------
// Model

class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual std::string_view name() const = 0;
  virtual int feature_dim() const = 0;
  // Writes feature_dim() values. Must be safe to call concurrently.
  virtual void extract(const ModelInput& input, std::span<float> features) const = 0;
  virtual std::vector<ParameterRef> parameters() = 0;
};

// Three conv3x3+ReLU blocks (3->8, 8->16, 16->16 channels) with 2x2 max,
// 2x2 max and 4x4 average pooling: 224x224x3 -> 14x14x16. Randomly
// initialised from a seed and never trained.
class TinyTestBackbone final : public Backbone {
 public:
  explicit TinyTestBackbone(std::uint64_t seed);
  std::string_view name() const override { return "tiny_test"; }
  int feature_dim() const override { return 16 * 14 * 14; }
  void extract(const ModelInput& input, std::span<float> features) const override;
  std::vector<ParameterRef> parameters() override;

 private:
  struct Block {
    int c_in, c_out, pool;
    bool average;
    std::vector<float> weights, bias;
  };
  std::vector<Block> blocks_;
};

struct DenseLayer {
  Matrix weights;  // in x out
  Eigen::RowVectorXf bias;
};

struct BatchNormLayer {
  Eigen::RowVectorXf gamma, beta, moving_mean, moving_variance;
};

class Model {
 public:
  Model(BackboneConfig backbone_config, HeadConfig head_config, std::unique_ptr<Backbone> backbone,
        std::uint64_t head_seed);

  const BackboneConfig& backbone_config() const { return backbone_config_; }
  const HeadConfig& head_config() const { return head_config_; }
  const Backbone& backbone() const { return *backbone_; }
  int feature_dim() const { return backbone_->feature_dim(); }

  // Frozen-backbone features, one row per input. Parallel over inputs.
  Matrix extract_features(std::span<const ModelInput> inputs) const;
  Matrix extract_features(std::size_t count,
                          const std::function<ModelInput(std::size_t)>& input) const;

  // Inference-mode head (batch norm uses the moving statistics).
  Matrix head_forward(const Matrix& features) const;
  // N x 16 predictions in cm; an empty batch gives a 0 x 16 result.
  Matrix predict_batch(std::span<const ModelInput> inputs) const;

  // Head weights, biases, gamma and beta. Excludes the backbone and the
  // batch-norm moving statistics.
  std::vector<ParameterRef> trainable_parameters();
  std::vector<ParameterRef> backbone_parameters() { return backbone_->parameters(); }
  // Every tensor, trainable or not, backbone included: the checkpoint content.
  std::vector<ParameterRef> state();

  std::vector<DenseLayer>& dense_layers() { return dense_; }
  std::vector<BatchNormLayer>& norm_layers() { return norms_; }
  const std::vector<DenseLayer>& dense_layers() const { return dense_; }
  const std::vector<BatchNormLayer>& norm_layers() const { return norms_; }

 private:
  BackboneConfig backbone_config_;
  HeadConfig head_config_;
  std::unique_ptr<Backbone> backbone_;
  std::vector<DenseLayer> dense_;       // hidden layers then the output layer
  std::vector<BatchNormLayer> norms_;   // one per hidden layer
};

// Throws ConfigError for unknown names and for the ImageNet backbones, whose
// pretrained weights are not bundled.
Model build_model(const BackboneConfig& backbone, const HeadConfig& head, std::uint64_t seed = 0);

// Mean absolute error over every element, the training loss.
double mae_loss(const Matrix& predictions, const Eigen::MatrixXd& targets);

// One Adam step on the head at a time; the backbone is never touched.
class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& config);
  // Training-mode forward/backward on one batch; returns the batch loss
  // measured before the update.
  double step(const Matrix& features, const Eigen::MatrixXd& targets);

 private:
  Model& model_;
  TrainConfig config_;
  long long t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

// Labelled inputs, loaded lazily.
struct ExampleSet {
  std::size_t size = 0;
  std::function<ModelInput(std::size_t)> input;
  Eigen::MatrixXd targets;  // size x 16
};

ExampleSet examples_from(std::vector<ModelInput> inputs, Eigen::MatrixXd targets);
ExampleSet examples_for(const DatasetManifest& manifest, const std::filesystem::path& root,
                        Split split, const Normalization& norm);

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch, training mode, batch-size weighted
  std::vector<double> val_loss;    // per epoch, inference mode
  int best_epoch = 0;              // 1-based
  double best_val_loss = 0.0;
  int stopped_epoch = 0;
  bool early_stopped = false;
};

struct TrainHooks {
  // Replaces the measured validation loss of an epoch (1-based).
  std::function<double(int epoch, double measured)> val_loss_override;
  std::function<void(int epoch, const Model& model)> on_epoch_end;
};

// Precomputes the frozen features once, then trains the head. Returns with
// the best validation-loss weights restored.
TrainHistory train_model(Model& model, const ExampleSet& train, const ExampleSet& val,
                         const TrainConfig& config, const TrainHooks& hooks = {});
TrainHistory train_on_features(Model& model, const Matrix& train_features,
                               const Eigen::MatrixXd& train_targets, const Matrix& val_features,
                               const Eigen::MatrixXd& val_targets, const TrainConfig& config,
                               const TrainHooks& hooks = {});

// Checkpoint directory: weights.bin + model_card.json.
void save_checkpoint(Model& model, const std::filesystem::path& dir, const nlohmann::json& card_extra);
Model load_checkpoint(const std::filesystem::path& dir);
nlohmann::json read_model_card(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Evaluation

// Mean over samples of |prediction - target| for one measurement column.
double compute_mae(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets,
                   int measurement);

// Row order of the published comparison tables.
inline constexpr std::array<std::string_view, 5> kReportedMeasurements = {
    "waist_circumference", "pelvis_circumference", "shoulder_to_wrist", "leg_length",
    "torso_length"};
std::string_view report_label(std::string_view measurement);

struct MaeRow {
  std::string measurement;
  std::string label;
  double male = 0.0;
  double female = 0.0;
  double total = 0.0;
};

struct EvalReport {
  std::string model_name;
  std::vector<MaeRow> rows;
  MaeRow mean;  // mean over the rows of each column
  std::size_t n_male = 0;
  std::size_t n_female = 0;
};

EvalReport evaluate_predictions(std::string model_name, const Eigen::MatrixXd& male_predictions,
                                const Eigen::MatrixXd& male_targets,
                                const Eigen::MatrixXd& female_predictions,
                                const Eigen::MatrixXd& female_targets,
                                std::span<const std::string_view> measurements = kReportedMeasurements);

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  // One row of 16 predictions per record.
  virtual Eigen::MatrixXd predict(const std::vector<const SampleRecord*>& records,
                                  const std::filesystem::path& root) const = 0;
};

class ModelPredictor final : public Predictor {
 public:
  explicit ModelPredictor(const Model& model) : model_(model) {}
  std::string name() const override { return model_.backbone_config().name; }
  Eigen::MatrixXd predict(const std::vector<const SampleRecord*>& records,
                          const std::filesystem::path& root) const override;

 private:
  const Model& model_;
};

// Echoes the ground truth.
class PerfectPredictor final : public Predictor {
 public:
  std::string name() const override { return "perfect"; }
  Eigen::MatrixXd predict(const std::vector<const SampleRecord*>& records,
                          const std::filesystem::path& root) const override;
};

// Predicts the same row for every sample, e.g. the training-set mean.
class ConstantPredictor final : public Predictor {
 public:
  ConstantPredictor(std::string name, Eigen::RowVectorXd row) : name_(std::move(name)), row_(std::move(row)) {}
  static ConstantPredictor train_mean(const DatasetManifest& manifest);
  std::string name() const override { return name_; }
  Eigen::MatrixXd predict(const std::vector<const SampleRecord*>& records,
                          const std::filesystem::path& root) const override;

 private:
  std::string name_;
  Eigen::RowVectorXd row_;
};

// Male / female / total MAE on the manifest's test split.
EvalReport evaluate_model(const Predictor& predictor, const DatasetManifest& manifest,
                          const std::filesystem::path& root,
                          std::span<const std::string_view> measurements = kReportedMeasurements);

std::string format_eval_csv(const EvalReport& report);
std::string format_eval_table(const EvalReport& report);

}  // namespace bm
