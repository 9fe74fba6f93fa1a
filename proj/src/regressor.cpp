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

#include "bodymeasure/regressor.hpp"

#include <algorithm>
#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/utility.hpp>
#include <cereal/types/vector.hpp>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

#include "bodymeasure/errors.hpp"
#include "bodymeasure/kernels.hpp"
#include "bodymeasure/rng.hpp"

namespace bm {
namespace {

bool known_backbone(std::string_view name) {
  return std::find(kBackboneNames.begin(), kBackboneNames.end(), name) != kBackboneNames.end();
}

std::span<float> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<float> view(Eigen::RowVectorXf& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void fill_uniform(std::span<float> values, float limit, Rng& rng) {
  for (float& v : values) v = static_cast<float>(rng.uniform(-limit, limit));
}

float activate(float x, bool relu) { return relu ? std::max(x, 0.0f) : std::tanh(x); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

BackboneConfig BackboneConfig::preset(std::string_view name) {
  BackboneConfig c;
  c.name = std::string(name);
  if (name == "tiny_test") {
    c.feature_dim = 16 * 14 * 14;
  } else if (name == "vgg19") {
    c.feature_dim = 7 * 7 * 512;
  } else if (name == "resnet50") {
    c.feature_dim = 7 * 7 * 2048;
  } else if (name == "densenet121") {
    c.feature_dim = 7 * 7 * 1024;
  } else {
    throw ConfigError("unknown backbone '" + c.name + "'");
  }
  return c;
}

void BackboneConfig::validate() const {
  if (!known_backbone(name)) throw ConfigError("unknown backbone '" + name + "'");
  if (!frozen) throw ConfigError("backbone must be frozen");
  if (feature_dim <= 0) throw ConfigError("backbone feature dimension must be positive");
  for (float s : normalization.stddev) {
    if (!(s > 0.0f)) throw ConfigError("normalization stddev must be positive");
  }
}

void HeadConfig::validate() const {
  if (hidden != std::vector<int>{1024, 512, 128})
    throw ConfigError("head hidden widths must be [1024, 512, 128]");
  if (outputs != static_cast<int>(kNumMeasurements))
    throw ConfigError("head must have 16 outputs");
  if (activation != "relu" && activation != "tanh")
    throw ConfigError("unsupported hidden activation '" + activation + "'");
  if (!(bn_momentum >= 0.0f && bn_momentum < 1.0f)) throw ConfigError("bn_momentum out of range");
  if (!(bn_epsilon > 0.0f)) throw ConfigError("bn_epsilon must be positive");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

void to_json(nlohmann::json& j, const BackboneConfig& c) {
  j = {{"name", c.name},
       {"normalization", {{"mean", c.normalization.mean}, {"std", c.normalization.stddev}}},
       {"frozen", c.frozen},
       {"feature_dim", c.feature_dim},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, BackboneConfig& c) {
  try {
    c = BackboneConfig::preset(j.at("name").get<std::string>());
    if (j.contains("normalization")) {
      const auto& n = j.at("normalization");
      if (n.contains("mean")) c.normalization.mean = n.at("mean").get<std::array<float, 3>>();
      if (n.contains("std")) c.normalization.stddev = n.at("std").get<std::array<float, 3>>();
    }
    c.frozen = j.value("frozen", true);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("backbone config: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const HeadConfig& c) {
  j = {{"hidden", c.hidden},
       {"batch_norm", true},
       {"activation", c.activation},
       {"outputs", c.outputs},
       {"bn_momentum", c.bn_momentum},
       {"bn_epsilon", c.bn_epsilon}};
}

void from_json(const nlohmann::json& j, HeadConfig& c) {
  try {
    c = HeadConfig{};
    c.hidden = j.value("hidden", c.hidden);
    c.activation = j.value("activation", c.activation);
    c.outputs = j.value("outputs", c.outputs);
    c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
    c.bn_epsilon = j.value("bn_epsilon", c.bn_epsilon);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("head config: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"optimizer", "adam"},
       {"loss", "mae"},
       {"learning_rate", c.learning_rate},
       {"max_epochs", c.max_epochs},
       {"batch_size", c.batch_size},
       {"patience", c.patience},
       {"seed", c.seed},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"epsilon", c.epsilon},
       {"shuffle", c.shuffle},
       {"output_bias_from_targets", c.output_bias_from_targets}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  try {
    c = TrainConfig{};
    if (j.value("optimizer", std::string("adam")) != "adam")
      throw ConfigError("only the adam optimizer is supported");
    if (j.value("loss", std::string("mae")) != "mae")
      throw ConfigError("only the mae loss is supported");
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.shuffle = j.value("shuffle", c.shuffle);
    c.output_bias_from_targets = j.value("output_bias_from_targets", c.output_bias_from_targets);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Backbone

TinyTestBackbone::TinyTestBackbone(std::uint64_t seed) {
  const int shapes[3][4] = {{3, 8, 2, 0}, {8, 16, 2, 0}, {16, 16, 4, 1}};
  for (int b = 0; b < 3; ++b) {
    Block block{shapes[b][0], shapes[b][1], shapes[b][2], shapes[b][3] == 1, {}, {}};
    block.weights.resize(static_cast<std::size_t>(block.c_out) * block.c_in * 9);
    block.bias.assign(static_cast<std::size_t>(block.c_out), 0.0f);
    Rng rng(derive_seed(seed, 0xb0, static_cast<std::uint64_t>(b)));
    // He-uniform
    fill_uniform(block.weights, std::sqrt(6.0f / static_cast<float>(block.c_in * 9)), rng);
    blocks_.push_back(std::move(block));
  }
}

void TinyTestBackbone::extract(const ModelInput& input, std::span<float> features) const {
  if (input.data.size() != static_cast<std::size_t>(kInputSize) * kInputSize * kInputChannels)
    throw InvalidArgument("model input must be 224x224x3");
  if (features.size() != static_cast<std::size_t>(feature_dim()))
    throw InvalidArgument("feature buffer size mismatch");

  int size = kInputSize;
  std::vector<float> x(static_cast<std::size_t>(kInputChannels) * size * size);
  for (int c = 0; c < kInputChannels; ++c)
    for (int y = 0; y < size; ++y)
      for (int xx = 0; xx < size; ++xx)
        x[(static_cast<std::size_t>(c) * size + y) * size + xx] = input.at(y, xx, c);

  std::vector<float> conv, pooled;
  for (const Block& b : blocks_) {
    conv.resize(static_cast<std::size_t>(b.c_out) * size * size);
    kernels::conv3x3_relu(x, b.c_in, size, size, b.weights, b.bias, b.c_out, conv);
    const int next = size / b.pool;
    pooled.resize(static_cast<std::size_t>(b.c_out) * next * next);
    if (b.average) {
      kernels::avg_pool(conv, b.c_out, size, size, b.pool, pooled);
    } else {
      kernels::max_pool(conv, b.c_out, size, size, b.pool, pooled);
    }
    x.swap(pooled);
    size = next;
  }
  std::copy(x.begin(), x.end(), features.begin());
}

std::vector<ParameterRef> TinyTestBackbone::parameters() {
  std::vector<ParameterRef> out;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const std::string prefix = "backbone/conv" + std::to_string(b + 1);
    out.push_back({prefix + "/kernel", blocks_[b].weights});
    out.push_back({prefix + "/bias", blocks_[b].bias});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model

Model::Model(BackboneConfig backbone_config, HeadConfig head_config,
             std::unique_ptr<Backbone> backbone, std::uint64_t head_seed)
    : backbone_config_(std::move(backbone_config)),
      head_config_(std::move(head_config)),
      backbone_(std::move(backbone)) {
  std::vector<int> widths = {backbone_->feature_dim()};
  widths.insert(widths.end(), head_config_.hidden.begin(), head_config_.hidden.end());
  widths.push_back(head_config_.outputs);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer d;
    d.weights.resize(widths[l], widths[l + 1]);
    d.bias = Eigen::RowVectorXf::Zero(widths[l + 1]);
    // Glorot-uniform
    Rng rng(derive_seed(head_seed, 0xde, l));
    fill_uniform(view(d.weights), std::sqrt(6.0f / static_cast<float>(widths[l] + widths[l + 1])),
                 rng);
    dense_.push_back(std::move(d));
    if (l + 2 < widths.size()) {
      const int w = widths[l + 1];
      norms_.push_back({Eigen::RowVectorXf::Ones(w), Eigen::RowVectorXf::Zero(w),
                        Eigen::RowVectorXf::Zero(w), Eigen::RowVectorXf::Ones(w)});
    }
  }
}

Matrix Model::extract_features(std::span<const ModelInput> inputs) const {
  return extract_features(inputs.size(), [&](std::size_t i) { return inputs[i]; });
}

Matrix Model::extract_features(std::size_t count,
                               const std::function<ModelInput(std::size_t)>& input) const {
  const int dim = backbone_->feature_dim();
  Matrix features(static_cast<Eigen::Index>(count), dim);
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      const ModelInput in = input(static_cast<std::size_t>(i));
      backbone_->extract(in, {features.row(i).data(), static_cast<std::size_t>(dim)});
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return features;
}

Matrix Model::head_forward(const Matrix& features) const {
  if (features.cols() != backbone_->feature_dim())
    throw InvalidArgument("feature width does not match the backbone");
  const bool relu = head_config_.activation == "relu";
  Matrix a = features;
  for (std::size_t l = 0; l < dense_.size(); ++l) {
    Matrix z = a * dense_[l].weights;
    z.rowwise() += dense_[l].bias;
    if (l < norms_.size()) {
      const BatchNormLayer& bn = norms_[l];
      const Eigen::RowVectorXf scale =
          bn.gamma.array() / (bn.moving_variance.array() + head_config_.bn_epsilon).sqrt();
      const Eigen::RowVectorXf shift = bn.beta.array() - bn.moving_mean.array() * scale.array();
      for (Eigen::Index r = 0; r < z.rows(); ++r)
        for (Eigen::Index c = 0; c < z.cols(); ++c)
          z(r, c) = activate(z(r, c) * scale(c) + shift(c), relu);
    }
    a = std::move(z);
  }
  return a;
}

Matrix Model::predict_batch(std::span<const ModelInput> inputs) const {
  if (inputs.empty()) return Matrix(0, head_config_.outputs);
  return head_forward(extract_features(inputs));
}

std::vector<ParameterRef> Model::trainable_parameters() {
  std::vector<ParameterRef> out;
  for (std::size_t l = 0; l < dense_.size(); ++l) {
    const std::string prefix = "head/dense" + std::to_string(l + 1);
    out.push_back({prefix + "/kernel", view(dense_[l].weights)});
    out.push_back({prefix + "/bias", view(dense_[l].bias)});
    if (l < norms_.size()) {
      const std::string bn = "head/batch_norm" + std::to_string(l + 1);
      out.push_back({bn + "/gamma", view(norms_[l].gamma)});
      out.push_back({bn + "/beta", view(norms_[l].beta)});
    }
  }
  return out;
}

std::vector<ParameterRef> Model::state() {
  std::vector<ParameterRef> out = backbone_->parameters();
  for (ParameterRef& p : trainable_parameters()) out.push_back(std::move(p));
  for (std::size_t l = 0; l < norms_.size(); ++l) {
    const std::string bn = "head/batch_norm" + std::to_string(l + 1);
    out.push_back({bn + "/moving_mean", view(norms_[l].moving_mean)});
    out.push_back({bn + "/moving_variance", view(norms_[l].moving_variance)});
  }
  return out;
}

Model build_model(const BackboneConfig& backbone, const HeadConfig& head, std::uint64_t seed) {
  backbone.validate();
  head.validate();
  if (backbone.name != "tiny_test")
    throw ConfigError("pretrained weights for backbone '" + backbone.name +
                      "' are not bundled; use tiny_test");
  auto net = std::make_unique<TinyTestBackbone>(backbone.seed);
  if (net->feature_dim() != backbone.feature_dim)
    throw ConfigError("tiny_test feature dimension is " + std::to_string(net->feature_dim()));
  return Model(backbone, head, std::move(net), seed);
}

double mae_loss(const Matrix& predictions, const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw InvalidArgument("prediction and target shapes differ");
  if (predictions.size() == 0) throw InvalidArgument("empty batch");
  return (predictions.cast<double>() - targets).cwiseAbs().mean();
}

// ---------------------------------------------------------------------------
// Training

Trainer::Trainer(Model& model, const TrainConfig& config) : model_(model), config_(config) {
  config_.validate();
  for (const ParameterRef& p : model_.trainable_parameters()) {
    m_.emplace_back(p.values.size(), 0.0f);
    v_.emplace_back(p.values.size(), 0.0f);
  }
}

double Trainer::step(const Matrix& features, const Eigen::MatrixXd& targets) {
  const Eigen::Index batch = features.rows();
  if (batch == 0) throw StateError("empty training batch");
  if (targets.rows() != batch || targets.cols() != model_.head_config().outputs)
    throw InvalidArgument("target shape mismatch");

  auto& dense = model_.dense_layers();
  auto& norms = model_.norm_layers();
  const HeadConfig& hc = model_.head_config();
  const bool relu = hc.activation == "relu";
  const std::size_t hidden = norms.size();

  // Forward pass in training mode, keeping what the backward pass needs.
  std::vector<Matrix> inputs(dense.size());    // input to each dense layer
  std::vector<Matrix> normalized(hidden);      // x-hat per hidden layer
  std::vector<Matrix> activated(hidden);       // post-activation
  std::vector<Eigen::RowVectorXf> inv_std(hidden);
  inputs[0] = features;
  for (std::size_t l = 0; l < hidden; ++l) {
    Matrix z = inputs[l] * dense[l].weights;
    z.rowwise() += dense[l].bias;
    const Eigen::RowVectorXf mean = z.colwise().mean();
    z.rowwise() -= mean;
    const Eigen::RowVectorXf var = z.array().square().colwise().mean();
    inv_std[l] = (var.array() + hc.bn_epsilon).rsqrt();
    for (Eigen::Index r = 0; r < batch; ++r) z.row(r).array() *= inv_std[l].array();
    normalized[l] = z;
    Matrix a(batch, z.cols());
    for (Eigen::Index r = 0; r < batch; ++r)
      for (Eigen::Index c = 0; c < z.cols(); ++c)
        a(r, c) = activate(z(r, c) * norms[l].gamma(c) + norms[l].beta(c), relu);
    activated[l] = a;
    inputs[l + 1] = std::move(a);

    const float mom = hc.bn_momentum;
    norms[l].moving_mean = mom * norms[l].moving_mean + (1.0f - mom) * mean;
    norms[l].moving_variance = mom * norms[l].moving_variance + (1.0f - mom) * var;
  }
  Matrix out = inputs[hidden] * dense[hidden].weights;
  out.rowwise() += dense[hidden].bias;

  const double loss = mae_loss(out, targets);
  if (!std::isfinite(loss)) return loss;

  // Backward pass. d|x|/dx is taken as sign(x), 0 at 0.
  const float scale = 1.0f / static_cast<float>(batch * out.cols());
  Matrix grad(batch, out.cols());
  for (Eigen::Index r = 0; r < batch; ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const double d = static_cast<double>(out(r, c)) - targets(r, c);
      grad(r, c) = d > 0 ? scale : (d < 0 ? -scale : 0.0f);
    }

  std::vector<std::vector<float>> grads;  // same order as trainable_parameters()
  std::vector<std::vector<float>> layer_grads(dense.size() * 2 + hidden * 2);
  auto store = [](const auto& m) { return std::vector<float>(m.data(), m.data() + m.size()); };

  for (std::size_t l = dense.size(); l-- > 0;) {
    const Matrix dw = inputs[l].transpose() * grad;
    const Eigen::RowVectorXf db = grad.colwise().sum();
    Matrix upstream;
    if (l > 0) upstream = grad * dense[l].weights.transpose();
    const std::size_t base = l * 4;  // dense l -> kernel, bias, gamma, beta
    layer_grads[base] = store(dw);
    layer_grads[base + 1] = store(db);
    if (l == 0) break;

    const std::size_t h = l - 1;
    // Through the activation.
    Matrix dy(batch, upstream.cols());
    for (Eigen::Index r = 0; r < batch; ++r)
      for (Eigen::Index c = 0; c < upstream.cols(); ++c) {
        const float a = activated[h](r, c);
        const float d = relu ? (a > 0.0f ? 1.0f : 0.0f) : 1.0f - a * a;
        dy(r, c) = upstream(r, c) * d;
      }
    const Eigen::RowVectorXf dgamma = (dy.array() * normalized[h].array()).colwise().sum();
    const Eigen::RowVectorXf dbeta = dy.colwise().sum();
    layer_grads[h * 4 + 2] = store(dgamma);
    layer_grads[h * 4 + 3] = store(dbeta);

    Matrix dxhat = dy;
    for (Eigen::Index r = 0; r < batch; ++r) dxhat.row(r).array() *= norms[h].gamma.array();
    const Eigen::RowVectorXf sum_dxhat = dxhat.colwise().sum();
    const Eigen::RowVectorXf sum_dxhat_xhat =
        (dxhat.array() * normalized[h].array()).colwise().sum();
    const float n = static_cast<float>(batch);
    Matrix dz(batch, dxhat.cols());
    for (Eigen::Index r = 0; r < batch; ++r)
      dz.row(r) = (inv_std[h].array() / n) *
                  (n * dxhat.row(r).array() - sum_dxhat.array() -
                   normalized[h].row(r).array() * sum_dxhat_xhat.array());
    grad = std::move(dz);
  }
  for (std::size_t l = 0; l < dense.size(); ++l) {
    grads.push_back(std::move(layer_grads[l * 4]));
    grads.push_back(std::move(layer_grads[l * 4 + 1]));
    if (l < hidden) {
      grads.push_back(std::move(layer_grads[l * 4 + 2]));
      grads.push_back(std::move(layer_grads[l * 4 + 3]));
    }
  }

  // Adam with the bias correction folded into the step size.
  ++t_;
  const double lr_t = config_.learning_rate * std::sqrt(1.0 - std::pow(config_.beta2, t_)) /
                      (1.0 - std::pow(config_.beta1, t_));
  const auto b1 = static_cast<float>(config_.beta1);
  const auto b2 = static_cast<float>(config_.beta2);
  const auto eps = static_cast<float>(config_.epsilon);
  const auto lr = static_cast<float>(lr_t);
  std::vector<ParameterRef> params = model_.trainable_parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::span<float> w = params[p].values;
    const std::vector<float>& g = grads[p];
    std::vector<float>& m = m_[p];
    std::vector<float>& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      w[i] -= lr * m[i] / (std::sqrt(v[i]) + eps);
    }
  }
  return loss;
}

ExampleSet examples_from(std::vector<ModelInput> inputs, Eigen::MatrixXd targets) {
  if (static_cast<Eigen::Index>(inputs.size()) != targets.rows())
    throw InvalidArgument("input and target counts differ");
  ExampleSet set;
  set.size = inputs.size();
  auto shared = std::make_shared<std::vector<ModelInput>>(std::move(inputs));
  set.input = [shared](std::size_t i) { return (*shared)[i]; };
  set.targets = std::move(targets);
  return set;
}

ExampleSet examples_for(const DatasetManifest& manifest, const std::filesystem::path& root,
                        Split split, const Normalization& norm) {
  const auto records = manifest.records_in(split);
  ExampleSet set;
  set.size = records.size();
  set.targets = target_matrix(records);
  std::vector<std::filesystem::path> paths;
  for (const SampleRecord* r : records) paths.push_back(root / r->image_path);
  set.input = [paths = std::move(paths), norm](std::size_t i) {
    return to_model_input(read_png(paths[i]), norm);
  };
  return set;
}

TrainHistory train_model(Model& model, const ExampleSet& train, const ExampleSet& val,
                         const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (train.size == 0) throw StateError("training set is empty");
  if (val.size == 0) throw StateError("validation set is empty");
  const Matrix train_features = model.extract_features(train.size, train.input);
  const Matrix val_features = model.extract_features(val.size, val.input);
  return train_on_features(model, train_features, train.targets, val_features, val.targets,
                           config, hooks);
}

TrainHistory train_on_features(Model& model, const Matrix& train_features,
                               const Eigen::MatrixXd& train_targets, const Matrix& val_features,
                               const Eigen::MatrixXd& val_targets, const TrainConfig& config,
                               const TrainHooks& hooks) {
  config.validate();
  if (train_features.rows() == 0) throw StateError("training set is empty");
  if (val_features.rows() == 0) throw StateError("validation set is empty");
  if (train_targets.rows() != train_features.rows() || val_targets.rows() != val_features.rows())
    throw InvalidArgument("feature and target counts differ");

  if (config.output_bias_from_targets)
    model.dense_layers().back().bias = train_targets.colwise().mean().cast<float>();

  Trainer trainer(model, config);
  Rng rng(derive_seed(config.seed, 0x7a));
  const Eigen::Index n = train_features.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  TrainHistory history;
  std::vector<DenseLayer> best_dense;
  std::vector<BatchNormLayer> best_norms;
  int wait = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (config.shuffle) rng.shuffle(std::span<Eigen::Index>(order));
    double weighted = 0.0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(config.batch_size, n - start);
      Matrix x(count, train_features.cols());
      Eigen::MatrixXd y(count, train_targets.cols());
      for (Eigen::Index r = 0; r < count; ++r) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
        x.row(r) = train_features.row(src);
        y.row(r) = train_targets.row(src);
      }
      const double loss = trainer.step(x, y);
      if (!std::isfinite(loss))
        throw DivergenceError(epoch, "non-finite training loss at epoch " + std::to_string(epoch));
      weighted += loss * static_cast<double>(count);
    }
    const double train_loss = weighted / static_cast<double>(n);

    double val_loss = mae_loss(model.head_forward(val_features), val_targets);
    if (hooks.val_loss_override) val_loss = hooks.val_loss_override(epoch, val_loss);
    if (!std::isfinite(val_loss))
      throw DivergenceError(epoch, "non-finite validation loss at epoch " + std::to_string(epoch));

    history.train_loss.push_back(train_loss);
    history.val_loss.push_back(val_loss);
    history.stopped_epoch = epoch;
    if (history.best_epoch == 0 || val_loss < history.best_val_loss) {
      history.best_epoch = epoch;
      history.best_val_loss = val_loss;
      best_dense = model.dense_layers();
      best_norms = model.norm_layers();
      wait = 0;
    } else {
      ++wait;
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);
    if (wait >= config.patience) {
      history.early_stopped = true;
      break;
    }
  }
  model.dense_layers() = std::move(best_dense);
  model.norm_layers() = std::move(best_norms);
  return history;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr std::string_view kWeightsFile = "weights.bin";
constexpr std::string_view kModelCard = "model_card.json";
constexpr std::uint32_t kWeightsVersion = 1;
using Tensor = std::pair<std::string, std::vector<float>>;
}  // namespace

void save_checkpoint(Model& model, const std::filesystem::path& dir,
                     const nlohmann::json& card_extra) {
  std::vector<Tensor> tensors;
  for (const ParameterRef& p : model.state())
    tensors.emplace_back(p.name, std::vector<float>(p.values.begin(), p.values.end()));
  std::ostringstream bytes(std::ios::binary);
  {
    cereal::PortableBinaryOutputArchive archive(bytes);
    archive(kWeightsVersion, tensors);
  }

  nlohmann::json card = card_extra;
  card["backbone"] = model.backbone_config();
  card["head"] = model.head_config();
  card["weights_file"] = kWeightsFile;
  card["format_version"] = kWeightsVersion;

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text_atomic(dir / kWeightsFile, bytes.str());
  write_text_atomic(dir / kModelCard, card.dump(2) + "\n");
}

nlohmann::json read_model_card(const std::filesystem::path& dir) {
  try {
    return nlohmann::json::parse(read_text(dir / kModelCard));
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError("model card: " + std::string(e.what()));
  }
}

Model load_checkpoint(const std::filesystem::path& dir) {
  const nlohmann::json card = read_model_card(dir);
  BackboneConfig bc;
  HeadConfig hc;
  try {
    bc = card.at("backbone").get<BackboneConfig>();
    hc = card.at("head").get<HeadConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError("model card: " + std::string(e.what()));
  }
  Model model = build_model(bc, hc, card.value("seed", std::uint64_t{0}));

  std::istringstream bytes(read_text(dir / kWeightsFile), std::ios::binary);
  std::uint32_t version = 0;
  std::vector<Tensor> tensors;
  try {
    cereal::PortableBinaryInputArchive archive(bytes);
    archive(version, tensors);
  } catch (const std::exception& e) {
    throw DecodeError("weights: " + std::string(e.what()));
  }
  if (version != kWeightsVersion) throw DecodeError("unsupported weights version");
  std::vector<ParameterRef> state = model.state();
  if (state.size() != tensors.size()) throw DecodeError("weights tensor count mismatch");
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i].name != tensors[i].first || state[i].values.size() != tensors[i].second.size())
      throw DecodeError("weights tensor mismatch at " + state[i].name);
    std::copy(tensors[i].second.begin(), tensors[i].second.end(), state[i].values.begin());
  }
  return model;
}

// ---------------------------------------------------------------------------
// Evaluation

double compute_mae(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets,
                   int measurement) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw InvalidArgument("prediction and target shapes differ");
  if (predictions.rows() == 0) throw InvalidArgument("no samples");
  if (measurement < 0 || measurement >= predictions.cols())
    throw InvalidArgument("measurement index out of range");
  return (predictions.col(measurement) - targets.col(measurement)).cwiseAbs().mean();
}

std::string_view report_label(std::string_view measurement) {
  if (measurement == "waist_circumference") return "Waist circumference";
  if (measurement == "pelvis_circumference") return "Pelvis circumference";
  if (measurement == "shoulder_to_wrist") return "Arm length";
  if (measurement == "leg_length") return "Leg length";
  if (measurement == "torso_length") return "Torso length";
  return measurement;
}

EvalReport evaluate_predictions(std::string model_name, const Eigen::MatrixXd& male_predictions,
                                const Eigen::MatrixXd& male_targets,
                                const Eigen::MatrixXd& female_predictions,
                                const Eigen::MatrixXd& female_targets,
                                std::span<const std::string_view> measurements) {
  if (male_targets.rows() == 0) throw StateError("male test subset is empty");
  if (female_targets.rows() == 0) throw StateError("female test subset is empty");
  if (measurements.empty()) throw InvalidArgument("no measurements requested");

  Eigen::MatrixXd all_predictions(male_predictions.rows() + female_predictions.rows(),
                                  male_predictions.cols());
  all_predictions << male_predictions, female_predictions;
  Eigen::MatrixXd all_targets(male_targets.rows() + female_targets.rows(), male_targets.cols());
  all_targets << male_targets, female_targets;

  EvalReport report;
  report.model_name = std::move(model_name);
  report.n_male = static_cast<std::size_t>(male_targets.rows());
  report.n_female = static_cast<std::size_t>(female_targets.rows());
  for (std::string_view name : measurements) {
    const int idx = measurement_index(name);
    MaeRow row;
    row.measurement = std::string(name);
    row.label = std::string(report_label(name));
    row.male = compute_mae(male_predictions, male_targets, idx);
    row.female = compute_mae(female_predictions, female_targets, idx);
    row.total = compute_mae(all_predictions, all_targets, idx);
    report.rows.push_back(row);
  }
  report.mean.measurement = "mean";
  report.mean.label = "Mean MAE";
  for (const MaeRow& row : report.rows) {
    report.mean.male += row.male;
    report.mean.female += row.female;
    report.mean.total += row.total;
  }
  const auto k = static_cast<double>(report.rows.size());
  report.mean.male /= k;
  report.mean.female /= k;
  report.mean.total /= k;
  return report;
}

Eigen::MatrixXd ModelPredictor::predict(const std::vector<const SampleRecord*>& records,
                                        const std::filesystem::path& root) const {
  if (records.empty()) return Eigen::MatrixXd(0, model_.head_config().outputs);
  const Normalization norm = model_.backbone_config().normalization;
  const Matrix features = model_.extract_features(records.size(), [&](std::size_t i) {
    return to_model_input(read_png(root / records[i]->image_path), norm);
  });
  return model_.head_forward(features).cast<double>();
}

Eigen::MatrixXd PerfectPredictor::predict(const std::vector<const SampleRecord*>& records,
                                          const std::filesystem::path&) const {
  return target_matrix(records);
}

ConstantPredictor ConstantPredictor::train_mean(const DatasetManifest& manifest) {
  if (!manifest.is_split()) throw StateError("manifest has not been split");
  const auto train = manifest.records_in(Split::kTrain);
  if (train.empty()) throw StateError("train subset is empty");
  return ConstantPredictor("train_mean", target_matrix(train).colwise().mean());
}

Eigen::MatrixXd ConstantPredictor::predict(const std::vector<const SampleRecord*>& records,
                                           const std::filesystem::path&) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(records.size()), row_.size());
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) = row_;
  return out;
}

EvalReport evaluate_model(const Predictor& predictor, const DatasetManifest& manifest,
                          const std::filesystem::path& root,
                          std::span<const std::string_view> measurements) {
  const auto [male_ids, female_ids] = test_subsets(manifest);
  auto lookup = [&](const std::vector<std::string>& ids) {
    std::vector<const SampleRecord*> out;
    for (const std::string& id : ids) out.push_back(&manifest.record(id));
    return out;
  };
  const auto male = lookup(male_ids);
  const auto female = lookup(female_ids);
  if (male.empty()) throw StateError("male test subset is empty");
  if (female.empty()) throw StateError("female test subset is empty");
  return evaluate_predictions(predictor.name(), predictor.predict(male, root), target_matrix(male),
                              predictor.predict(female, root), target_matrix(female),
                              measurements);
}

}  // namespace bm
