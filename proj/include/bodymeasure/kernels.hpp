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

#include <cstdint>
#include <span>
#include <vector>

#include "bodymeasure/geometry.hpp"

// Data-parallel inner loops. Each kernel has an OpenMP version in
// bm::kernels and a plain single-threaded version in bm::kernels::serial that
// is kept as the reference for tests and benchmarks.
namespace bm::kernels {

// 3x3 convolution, stride 1, zero padding, followed by ReLU.
// Layouts: in  [c_in][h][w], weights [c_out][c_in][3][3], out [c_out][h][w].
void conv3x3_relu(std::span<const float> in, int c_in, int h, int w,
                  std::span<const float> weights, std::span<const float> bias, int c_out,
                  std::span<float> out);

// Non-overlapping k x k max pooling; h and w must be divisible by k.
void max_pool(std::span<const float> in, int channels, int h, int w, int k, std::span<float> out);

// Non-overlapping k x k average pooling; same shape rules as max_pool.
void avg_pool(std::span<const float> in, int channels, int h, int w, int k, std::span<float> out);

inline constexpr int kSubpixelBits = 8;

// A vertex already projected to image space: fixed-point pixel coordinates
// (kSubpixelBits fractional bits, y pointing down) plus a depth value.
struct ScreenVertex {
  std::int64_t x = 0;
  std::int64_t y = 0;
  double depth = 0.0;
};

// Point-in-triangle test at pixel centres with a top-left fill rule. Writes
// the maximum interpolated depth per covered pixel into `depth` (row-major,
// width * height); uncovered pixels keep their incoming value. Both windings
// are rasterized.
void rasterize_max_depth(std::span<const ScreenVertex> vertices, std::span<const Face> faces,
                         int width, int height, std::span<double> depth);

namespace serial {

void conv3x3_relu(std::span<const float> in, int c_in, int h, int w,
                  std::span<const float> weights, std::span<const float> bias, int c_out,
                  std::span<float> out);

void max_pool(std::span<const float> in, int channels, int h, int w, int k, std::span<float> out);

void avg_pool(std::span<const float> in, int channels, int h, int w, int k, std::span<float> out);

void rasterize_max_depth(std::span<const ScreenVertex> vertices, std::span<const Face> faces,
                         int width, int height, std::span<double> depth);

}  // namespace serial
}  // namespace bm::kernels
