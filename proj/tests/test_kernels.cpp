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
#include <vector>

#include "bodymeasure/bodygen.hpp"
#include "bodymeasure/errors.hpp"
#include "bodymeasure/kernels.hpp"
#include "bodymeasure/rng.hpp"
#include "support.hpp"

using namespace bm;

namespace {

std::vector<float> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// Direct definition of a zero-padded 3x3 convolution.
float conv_at(const std::vector<float>& in, int c_in, int h, int w, const std::vector<float>& k,
              const std::vector<float>& bias, int o, int y, int x) {
  double acc = bias[static_cast<std::size_t>(o)];
  for (int c = 0; c < c_in; ++c)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int yy = y + dy, xx = x + dx;
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
        acc += static_cast<double>(in[(static_cast<std::size_t>(c) * h + yy) * w + xx]) *
               k[((static_cast<std::size_t>(o) * c_in + c) * 3 + (dy + 1)) * 3 + (dx + 1)];
      }
  return static_cast<float>(std::max(acc, 0.0));
}

constexpr std::int64_t kOne = std::int64_t{1} << kernels::kSubpixelBits;

}  // namespace

TEST_CASE("conv3x3_relu matches the direct definition") {
  const int c_in = 3, c_out = 5, h = 9, w = 7;
  const auto in = random_vector(static_cast<std::size_t>(c_in) * h * w, 1);
  const auto k = random_vector(static_cast<std::size_t>(c_out) * c_in * 9, 2);
  const auto b = random_vector(c_out, 3);
  std::vector<float> out(static_cast<std::size_t>(c_out) * h * w);
  kernels::conv3x3_relu(in, c_in, h, w, k, b, c_out, out);
  for (int o = 0; o < c_out; ++o)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        CHECK(out[(static_cast<std::size_t>(o) * h + y) * w + x] ==
              doctest::Approx(conv_at(in, c_in, h, w, k, b, o, y, x)).epsilon(1e-5));
}

TEST_CASE("parallel and serial kernels agree bit for bit") {
  const int c_in = 8, c_out = 16, h = 32, w = 32;
  const auto in = random_vector(static_cast<std::size_t>(c_in) * h * w, 4);
  const auto k = random_vector(static_cast<std::size_t>(c_out) * c_in * 9, 5);
  const auto b = random_vector(c_out, 6);
  std::vector<float> a(static_cast<std::size_t>(c_out) * h * w), s(a.size());
  kernels::conv3x3_relu(in, c_in, h, w, k, b, c_out, a);
  kernels::serial::conv3x3_relu(in, c_in, h, w, k, b, c_out, s);
  CHECK(a == s);

  for (int pool : {2, 4}) {
    std::vector<float> pa(a.size() / (pool * pool)), ps(pa.size());
    kernels::max_pool(a, c_out, h, w, pool, pa);
    kernels::serial::max_pool(a, c_out, h, w, pool, ps);
    CHECK(pa == ps);
    kernels::avg_pool(a, c_out, h, w, pool, pa);
    kernels::serial::avg_pool(a, c_out, h, w, pool, ps);
    CHECK(pa == ps);
  }
}

TEST_CASE("pooling values") {
  // One channel, 4x4, values 0..15.
  std::vector<float> in(16);
  for (int i = 0; i < 16; ++i) in[static_cast<std::size_t>(i)] = static_cast<float>(i);
  std::vector<float> out(4);
  kernels::max_pool(in, 1, 4, 4, 2, out);
  CHECK(out == std::vector<float>{5, 7, 13, 15});
  kernels::avg_pool(in, 1, 4, 4, 2, out);
  CHECK(out == std::vector<float>{2.5f, 4.5f, 10.5f, 12.5f});
  std::vector<float> one(1);
  kernels::avg_pool(in, 1, 4, 4, 4, one);
  CHECK(one[0] == 7.5f);
  CHECK_THROWS_AS(kernels::max_pool(in, 1, 4, 4, 3, out), InvalidArgument);
  CHECK_THROWS_AS(kernels::avg_pool(in, 1, 4, 4, 2, one), InvalidArgument);
}

TEST_CASE("conv shape mismatch") {
  std::vector<float> in(10), k(9), b(1), out(10);
  CHECK_THROWS_AS(kernels::conv3x3_relu(in, 1, 3, 3, k, b, 1, out), InvalidArgument);
}

TEST_CASE("two triangles tiling a square cover each pixel exactly once") {
  // Square [10, 30) x [10, 30) in pixels, split along the diagonal. With
  // pixel centres at .5 the covered area is exactly 400 pixels; a shared
  // edge counted twice or not at all would change the sum below.
  std::vector<kernels::ScreenVertex> v = {
      {10 * kOne, 10 * kOne, 1.0}, {30 * kOne, 10 * kOne, 1.0}, {30 * kOne, 30 * kOne, 1.0}, {10 * kOne, 30 * kOne, 1.0}};
  for (const auto& faces : {std::vector<Face>{{0, 1, 2}, {0, 2, 3}}, std::vector<Face>{{0, 2, 1}, {0, 3, 2}}}) {
    int covered_once = 0;
    // Rasterize each triangle separately and count overlaps.
    std::vector<int> hits(64 * 64, 0);
    for (const Face& f : faces) {
      std::vector<double> depth(64 * 64, -1.0);
      kernels::rasterize_max_depth(v, std::vector<Face>{f}, 64, 64, depth);
      for (std::size_t i = 0; i < depth.size(); ++i) hits[i] += depth[i] > 0.0;
    }
    for (int h : hits) {
      CHECK(h <= 1);
      covered_once += h;
    }
    CHECK(covered_once == 400);
  }
}

TEST_CASE("rasterizer keeps the nearest depth") {
  std::vector<kernels::ScreenVertex> v = {{0, 0, 1.0},       {8 * kOne, 0, 1.0}, {0, 8 * kOne, 1.0},
                                          {0, 0, 5.0},       {8 * kOne, 0, 5.0}, {0, 8 * kOne, 5.0}};
  std::vector<double> depth(64, -100.0);
  kernels::rasterize_max_depth(v, std::vector<Face>{{0, 1, 2}, {3, 4, 5}}, 8, 8, depth);
  CHECK(depth[0] == 5.0);
  CHECK(depth[63] == -100.0);
}

TEST_CASE("parallel rasterizer matches serial on a body") {
  const BodyMesh body = build_body(bm::testing::typical_spec(), 64);
  std::vector<kernels::ScreenVertex> v;
  for (const Vec3& p : body.mesh.vertices) {
    v.push_back({static_cast<std::int64_t>((128.0 + 1.15 * p.x) * kOne),
                 static_cast<std::int64_t>((248.0 - 1.15 * p.y) * kOne), p.z});
  }
  std::vector<double> a(256 * 256, -1e9), s(a.size(), -1e9);
  kernels::rasterize_max_depth(v, body.mesh.faces, 256, 256, a);
  kernels::serial::rasterize_max_depth(v, body.mesh.faces, 256, 256, s);
  CHECK(a == s);
  CHECK(std::count_if(a.begin(), a.end(), [](double d) { return d > -1e9; }) > 1000);
}
