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

#include "bodymeasure/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <string>

#include "bodymeasure/errors.hpp"

namespace bm::kernels {

namespace {

void check_conv_shapes(std::size_t in, int c_in, int h, int w, std::size_t weights,
                       std::size_t bias, int c_out, std::size_t out) {
  const auto plane = static_cast<std::size_t>(h) * w;
  if (in != plane * c_in || out != plane * c_out ||
      weights != static_cast<std::size_t>(c_out) * c_in * 9 ||
      bias != static_cast<std::size_t>(c_out)) {
    throw InvalidArgument("conv3x3_relu: buffer sizes do not match the shape");
  }
}

// Triangle setup shared by both rasterizers.
struct Setup {
  ScreenVertex a, b, c;
  std::int64_t area = 0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounds
};

constexpr std::int64_t kOne = std::int64_t{1} << kSubpixelBits;
constexpr std::int64_t kHalf = kOne / 2;

std::int64_t edge(const ScreenVertex& a, const ScreenVertex& b, std::int64_t px, std::int64_t py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// Antisymmetric in (a, b): a shared edge belongs to exactly one neighbour.
bool owns_edge(const ScreenVertex& a, const ScreenVertex& b) {
  const std::int64_t dy = b.y - a.y, dx = b.x - a.x;
  return dy > 0 || (dy == 0 && dx < 0);
}

Setup setup(std::span<const ScreenVertex> v, const Face& f, int width, int height) {
  Setup s{v[f[0]], v[f[1]], v[f[2]]};
  s.area = edge(s.a, s.b, s.c.x, s.c.y);
  if (s.area < 0) {
    std::swap(s.b, s.c);
    s.area = -s.area;
  }
  if (s.area == 0) return s;
  const std::int64_t minx = std::min({s.a.x, s.b.x, s.c.x});
  const std::int64_t maxx = std::max({s.a.x, s.b.x, s.c.x});
  const std::int64_t miny = std::min({s.a.y, s.b.y, s.c.y});
  const std::int64_t maxy = std::max({s.a.y, s.b.y, s.c.y});
  // Pixel i has its centre at i * kOne + kHalf.
  auto first = [](std::int64_t lo) { return static_cast<int>((lo - kHalf + kOne - 1) >> kSubpixelBits); };
  auto last = [](std::int64_t hi) { return static_cast<int>((hi - kHalf) >> kSubpixelBits); };
  s.x0 = std::max(0, first(minx));
  s.x1 = std::min(width - 1, last(maxx));
  s.y0 = std::max(0, first(miny));
  s.y1 = std::min(height - 1, last(maxy));
  return s;
}

void shade_rows(const Setup& s, int row_begin, int row_end, int width, std::span<double> depth) {
  const bool own_bc = owns_edge(s.b, s.c), own_ca = owns_edge(s.c, s.a), own_ab = owns_edge(s.a, s.b);
  const double inv_area = 1.0 / static_cast<double>(s.area);
  for (int y = std::max(row_begin, s.y0); y <= std::min(row_end - 1, s.y1); ++y) {
    const std::int64_t py = y * kOne + kHalf;
    for (int x = s.x0; x <= s.x1; ++x) {
      const std::int64_t px = x * kOne + kHalf;
      const std::int64_t wa = edge(s.b, s.c, px, py);
      const std::int64_t wb = edge(s.c, s.a, px, py);
      const std::int64_t wc = edge(s.a, s.b, px, py);
      const bool inside = (wa > 0 || (wa == 0 && own_bc)) && (wb > 0 || (wb == 0 && own_ca)) &&
                          (wc > 0 || (wc == 0 && own_ab));
      if (!inside) continue;
      const double z = (static_cast<double>(wa) * s.a.depth + static_cast<double>(wb) * s.b.depth +
                        static_cast<double>(wc) * s.c.depth) *
                       inv_area;
      double& d = depth[static_cast<std::size_t>(y) * width + x];
      d = std::max(d, z);
    }
  }
}

void check_raster(std::span<const ScreenVertex> vertices, std::span<const Face> faces, int width,
                  int height, std::span<double> depth) {
  if (depth.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("rasterize_max_depth: depth buffer size mismatch");
  }
  for (const Face& f : faces) {
    for (auto i : f) {
      if (i >= vertices.size()) throw InvalidArgument("rasterize_max_depth: face index out of range");
    }
  }
}

void check_pool(std::span<const float> in, int channels, int h, int w, int k,
                std::span<const float> out, const char* what) {
  if (k < 1 || h % k != 0 || w % k != 0)
    throw InvalidArgument(std::string(what) + ": size not divisible by k");
  if (in.size() != static_cast<std::size_t>(channels) * h * w ||
      out.size() != static_cast<std::size_t>(channels) * (h / k) * (w / k)) {
    throw InvalidArgument(std::string(what) + ": buffer sizes do not match the shape");
  }
}

// Row-major sum over one k x k window.
float window_sum(std::span<const float> in, int c, int h, int w, int k, int oy, int ox) {
  float sum = 0.0f;
  for (int r = 0; r < k; ++r) {
    const float* row = in.data() + (static_cast<std::size_t>(c) * h + oy * k + r) * w + ox * k;
    for (int q = 0; q < k; ++q) sum += row[q];
  }
  return sum;
}

}  // namespace

void conv3x3_relu(std::span<const float> in, int c_in, int h, int w,
                  std::span<const float> weights, std::span<const float> bias, int c_out,
                  std::span<float> out) {
  check_conv_shapes(in.size(), c_in, h, w, weights.size(), bias.size(), c_out, out.size());
  const std::size_t plane = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < c_out; ++oc) {
    float* dst = out.data() + oc * plane;
    std::fill(dst, dst + plane, bias[oc]);
    for (int ic = 0; ic < c_in; ++ic) {
      const float* src = in.data() + ic * plane;
      const float* k = weights.data() + (static_cast<std::size_t>(oc) * c_in + ic) * 9;
      for (int dy = -1; dy <= 1; ++dy) {
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int dx = -1; dx <= 1; ++dx) {
          const float kv = k[(dy + 1) * 3 + (dx + 1)];
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          for (int y = y0; y < y1; ++y) {
            float* drow = dst + static_cast<std::size_t>(y) * w;
            const float* srow = src + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x0; x < x1; ++x) drow[x] += kv * srow[x];
          }
        }
      }
    }
    for (std::size_t i = 0; i < plane; ++i) dst[i] = std::max(dst[i], 0.0f);
  }
}

void max_pool(std::span<const float> in, int channels, int h, int w, int k, std::span<float> out) {
  if (k < 1 || h % k != 0 || w % k != 0) throw InvalidArgument("max_pool: size not divisible by k");
  const int oh = h / k, ow = w / k;
  if (in.size() != static_cast<std::size_t>(channels) * h * w ||
      out.size() != static_cast<std::size_t>(channels) * oh * ow) {
    throw InvalidArgument("max_pool: buffer sizes do not match the shape");
  }
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const float* src = in.data() + static_cast<std::size_t>(c) * h * w;
    float* dst = out.data() + static_cast<std::size_t>(c) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      float* drow = dst + static_cast<std::size_t>(oy) * ow;
      for (int ox = 0; ox < ow; ++ox) drow[ox] = src[static_cast<std::size_t>(oy) * k * w + ox * k];
      for (int r = 0; r < k; ++r) {
        const float* srow = src + static_cast<std::size_t>(oy * k + r) * w;
        for (int ox = 0; ox < ow; ++ox) {
          for (int s = 0; s < k; ++s) drow[ox] = std::max(drow[ox], srow[ox * k + s]);
        }
      }
    }
  }
}

void avg_pool(std::span<const float> in, int channels, int h, int w, int k, std::span<float> out) {
  check_pool(in, channels, h, w, k, out, "avg_pool");
  const int oh = h / k, ow = w / k;
  const float inv = 1.0f / static_cast<float>(k * k);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) out[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] =
          window_sum(in, c, h, w, k, oy, ox) * inv;
    }
  }
}

void rasterize_max_depth(std::span<const ScreenVertex> vertices, std::span<const Face> faces,
                         int width, int height, std::span<double> depth) {
  check_raster(vertices, faces, width, height, depth);
  const auto n = static_cast<std::ptrdiff_t>(faces.size());
  std::vector<Setup> setups(faces.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) setups[i] = setup(vertices, faces[i], width, height);

  // Threads own disjoint row bands, so no two threads touch the same pixel.
  constexpr int kBand = 8;
  const int bands = (height + kBand - 1) / kBand;
  std::vector<std::vector<std::uint32_t>> binned(static_cast<std::size_t>(bands));
  for (std::size_t i = 0; i < setups.size(); ++i) {
    const Setup& s = setups[i];
    if (s.area == 0 || s.y1 < s.y0) continue;
    const int b0 = std::max(0, s.y0 / kBand), b1 = std::min(bands - 1, s.y1 / kBand);
    for (int b = b0; b <= b1; ++b) binned[static_cast<std::size_t>(b)].push_back(static_cast<std::uint32_t>(i));
  }
#pragma omp parallel for schedule(dynamic)
  for (int band = 0; band < bands; ++band) {
    const int r0 = band * kBand, r1 = std::min(height, r0 + kBand);
    for (std::uint32_t i : binned[static_cast<std::size_t>(band)]) {
      const Setup& s = setups[i];
      if (s.y1 < r0 || s.y0 >= r1) continue;
      shade_rows(s, r0, r1, width, depth);
    }
  }
}

namespace serial {

void conv3x3_relu(std::span<const float> in, int c_in, int h, int w,
                  std::span<const float> weights, std::span<const float> bias, int c_out,
                  std::span<float> out) {
  check_conv_shapes(in.size(), c_in, h, w, weights.size(), bias.size(), c_out, out.size());
  for (int oc = 0; oc < c_out; ++oc) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float acc = bias[oc];
        for (int ic = 0; ic < c_in; ++ic) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int sy = y + ky - 1, sx = x + kx - 1;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              acc += weights[((static_cast<std::size_t>(oc) * c_in + ic) * 3 + ky) * 3 + kx] *
                     in[(static_cast<std::size_t>(ic) * h + sy) * w + sx];
            }
          }
        }
        out[(static_cast<std::size_t>(oc) * h + y) * w + x] = std::max(acc, 0.0f);
      }
    }
  }
}

void max_pool(std::span<const float> in, int channels, int h, int w, int k, std::span<float> out) {
  if (k < 1 || h % k != 0 || w % k != 0) throw InvalidArgument("max_pool: size not divisible by k");
  const int oh = h / k, ow = w / k;
  if (in.size() != static_cast<std::size_t>(channels) * h * w ||
      out.size() != static_cast<std::size_t>(channels) * oh * ow) {
    throw InvalidArgument("max_pool: buffer sizes do not match the shape");
  }
  for (int c = 0; c < channels; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float m = in[(static_cast<std::size_t>(c) * h + oy * k) * w + ox * k];
        for (int r = 0; r < k; ++r) {
          for (int s = 0; s < k; ++s) {
            m = std::max(m, in[(static_cast<std::size_t>(c) * h + oy * k + r) * w + ox * k + s]);
          }
        }
        out[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = m;
      }
    }
  }
}

void avg_pool(std::span<const float> in, int channels, int h, int w, int k, std::span<float> out) {
  check_pool(in, channels, h, w, k, out, "avg_pool");
  const int oh = h / k, ow = w / k;
  const float inv = 1.0f / static_cast<float>(k * k);
  for (int c = 0; c < channels; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float sum = 0.0f;
        for (int r = 0; r < k; ++r) {
          for (int q = 0; q < k; ++q) {
            sum += in[(static_cast<std::size_t>(c) * h + oy * k + r) * w + ox * k + q];
          }
        }
        out[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = sum * inv;
      }
    }
  }
}

void rasterize_max_depth(std::span<const ScreenVertex> vertices, std::span<const Face> faces,
                         int width, int height, std::span<double> depth) {
  check_raster(vertices, faces, width, height, depth);
  for (const Face& f : faces) {
    const Setup s = setup(vertices, f, width, height);
    if (s.area == 0) continue;
    shade_rows(s, 0, height, width, depth);
  }
}

}  // namespace serial
}  // namespace bm::kernels
