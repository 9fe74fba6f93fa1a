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

#include <array>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <vector>

#include "bodymeasure/geometry.hpp"

namespace bm {

// 8-bit single-channel image, row-major, row 0 at the top.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  bool empty() const { return pixels.empty(); }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

enum class Shading { kSilhouette, kDepth };

// Fixed-scale orthographic camera looking down -Z onto the XY plane. World
// x = 0 maps to the horizontal image centre; world y = 0 sits
// `bottom_margin_px` above the bottom edge.
struct RenderConfig {
  int width = 256;
  int height = 256;
  double px_per_cm = 1.15;
  double bottom_margin_px = 8.0;
  std::uint8_t background = 0;
  Shading shading = Shading::kDepth;
  // Depth shading maps z in [depth_far_cm, depth_near_cm] to
  // [foreground_min, foreground_max]; nearer is brighter.
  std::uint8_t foreground_min = 96;
  std::uint8_t foreground_max = 255;
  double depth_near_cm = 25.0;
  double depth_far_cm = -25.0;

  void validate() const;  // throws ConfigError
  friend bool operator==(const RenderConfig&, const RenderConfig&) = default;
};

void to_json(nlohmann::json& j, const RenderConfig& cfg);
void from_json(const nlohmann::json& j, RenderConfig& cfg);

// Throws OutOfFrameError if any vertex projects outside the image and
// InvalidArgument for an empty mesh.
GrayImage render_silhouette(const TriangleMesh& mesh, const RenderConfig& cfg);

namespace serial {
GrayImage render_silhouette(const TriangleMesh& mesh, const RenderConfig& cfg);
}

struct Normalization {
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> stddev{0.229f, 0.224f, 0.225f};

  static Normalization identity() { return {{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}}; }
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

inline constexpr int kInputSize = 224;
inline constexpr int kInputChannels = 3;

// Network input, 224 x 224 x 3, stored HWC.
struct ModelInput {
  std::vector<float> data = std::vector<float>(kInputSize * kInputSize * kInputChannels, 0.0f);

  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * kInputSize + x) * kInputChannels + c];
  }
  float& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * kInputSize + x) * kInputChannels + c];
  }
};

// Bilinear resampling with half-pixel centres; same-size input is returned
// unchanged.
std::vector<float> resize_bilinear(const GrayImage& image, int out_width, int out_height);

// Gray -> resize to 224 x 224 -> replicate to 3 channels -> (v/255 - mean)/std.
ModelInput to_model_input(const GrayImage& image, const Normalization& norm);

// PNG I/O. Reading converts any PNG to 8-bit gray; failures raise
// DecodeError (bad data) or IoError (missing file).
void write_png(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);

}  // namespace bm
