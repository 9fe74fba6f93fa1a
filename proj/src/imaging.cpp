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

#include "bodymeasure/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bodymeasure/errors.hpp"
#include "bodymeasure/kernels.hpp"

namespace bm {

void RenderConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("render: image dimensions must be positive");
  if (!(px_per_cm > 0.0)) throw ConfigError("render: px_per_cm must be positive");
  if (!(depth_near_cm > depth_far_cm)) throw ConfigError("render: depth_near_cm must exceed depth_far_cm");
  if (foreground_min > foreground_max) throw ConfigError("render: foreground_min > foreground_max");
}

void to_json(nlohmann::json& j, const RenderConfig& c) {
  j = nlohmann::json{{"width", c.width},
                     {"height", c.height},
                     {"px_per_cm", c.px_per_cm},
                     {"bottom_margin_px", c.bottom_margin_px},
                     {"background", c.background},
                     {"shading", c.shading == Shading::kDepth ? "depth" : "silhouette"},
                     {"foreground_min", c.foreground_min},
                     {"foreground_max", c.foreground_max},
                     {"depth_near_cm", c.depth_near_cm},
                     {"depth_far_cm", c.depth_far_cm}};
}

void from_json(const nlohmann::json& j, RenderConfig& c) {
  const RenderConfig d;
  c.width = j.value("width", d.width);
  c.height = j.value("height", d.height);
  c.px_per_cm = j.value("px_per_cm", d.px_per_cm);
  c.bottom_margin_px = j.value("bottom_margin_px", d.bottom_margin_px);
  c.background = j.value("background", d.background);
  const std::string shading = j.value("shading", std::string("depth"));
  if (shading == "depth") {
    c.shading = Shading::kDepth;
  } else if (shading == "silhouette") {
    c.shading = Shading::kSilhouette;
  } else {
    throw ConfigError("render: unknown shading '" + shading + "'");
  }
  c.foreground_min = j.value("foreground_min", d.foreground_min);
  c.foreground_max = j.value("foreground_max", d.foreground_max);
  c.depth_near_cm = j.value("depth_near_cm", d.depth_near_cm);
  c.depth_far_cm = j.value("depth_far_cm", d.depth_far_cm);
}

namespace {

std::vector<kernels::ScreenVertex> project(const TriangleMesh& mesh, const RenderConfig& cfg) {
  if (mesh.empty()) throw InvalidArgument("render: empty mesh");
  cfg.validate();
  const double one = std::ldexp(1.0, kernels::kSubpixelBits);
  std::vector<kernels::ScreenVertex> out;
  out.reserve(mesh.vertices.size());
  for (const Vec3& p : mesh.vertices) {
    const double u = 0.5 * cfg.width + p.x * cfg.px_per_cm;
    const double v = cfg.height - cfg.bottom_margin_px - p.y * cfg.px_per_cm;
    if (!(u >= 0.0 && u <= cfg.width && v >= 0.0 && v <= cfg.height)) {
      throw OutOfFrameError("mesh does not fit the " + std::to_string(cfg.width) + "x" +
                            std::to_string(cfg.height) + " frame at " +
                            std::to_string(cfg.px_per_cm) + " px/cm");
    }
    out.push_back({std::llround(u * one), std::llround(v * one), p.z});
  }
  return out;
}

GrayImage shade(const std::vector<double>& depth, const RenderConfig& cfg) {
  GrayImage image(cfg.width, cfg.height, cfg.background);
  const double span = cfg.depth_near_cm - cfg.depth_far_cm;
  const double levels = cfg.foreground_max - cfg.foreground_min;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth[i] == -std::numeric_limits<double>::infinity()) continue;
    if (cfg.shading == Shading::kSilhouette) {
      image.pixels[i] = cfg.foreground_max;
      continue;
    }
    const double t = std::clamp((depth[i] - cfg.depth_far_cm) / span, 0.0, 1.0);
    image.pixels[i] = static_cast<std::uint8_t>(cfg.foreground_min + std::lround(t * levels));
  }
  return image;
}

template <typename Rasterize>
GrayImage render_with(const TriangleMesh& mesh, const RenderConfig& cfg, Rasterize rasterize) {
  const auto screen = project(mesh, cfg);
  std::vector<double> depth(static_cast<std::size_t>(cfg.width) * cfg.height,
                            -std::numeric_limits<double>::infinity());
  rasterize(screen, mesh.faces, cfg.width, cfg.height, depth);
  return shade(depth, cfg);
}

}  // namespace

GrayImage render_silhouette(const TriangleMesh& mesh, const RenderConfig& cfg) {
  return render_with(mesh, cfg, [](const auto& v, const auto& f, int w, int h, auto& d) {
    kernels::rasterize_max_depth(v, f, w, h, d);
  });
}

namespace serial {
GrayImage render_silhouette(const TriangleMesh& mesh, const RenderConfig& cfg) {
  return render_with(mesh, cfg, [](const auto& v, const auto& f, int w, int h, auto& d) {
    kernels::serial::rasterize_max_depth(v, f, w, h, d);
  });
}
}  // namespace serial

std::vector<float> resize_bilinear(const GrayImage& image, int out_width, int out_height) {
  if (image.empty()) throw InvalidArgument("resize: empty image");
  std::vector<float> out(static_cast<std::size_t>(out_width) * out_height);
  const double sx = static_cast<double>(image.width) / out_width;
  const double sy = static_cast<double>(image.height) / out_height;
  for (int y = 0; y < out_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double tx = fx - x0;
      const double top = image.at(x0, y0) + tx * (image.at(x1, y0) - image.at(x0, y0));
      const double bottom = image.at(x0, y1) + tx * (image.at(x1, y1) - image.at(x0, y1));
      out[static_cast<std::size_t>(y) * out_width + x] = static_cast<float>(top + ty * (bottom - top));
    }
  }
  return out;
}

ModelInput to_model_input(const GrayImage& image, const Normalization& norm) {
  if (image.empty()) throw InvalidArgument("to_model_input: empty image");
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw DecodeError("to_model_input: pixel buffer does not match the image size");
  }
  const std::vector<float> gray = resize_bilinear(image, kInputSize, kInputSize);
  ModelInput input;
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const float v = gray[i] / 255.0f;
    for (int c = 0; c < kInputChannels; ++c) {
      input.data[i * kInputChannels + c] = (v - norm.mean[c]) / norm.stddev[c];
    }
  }
  return input;
}

}  // namespace bm
