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

#include "bodymeasure/primitives.hpp"

#include <numbers>

namespace bm::primitives {

namespace {

// Two rings of `n` vertices joined by quads, both ends capped with a fan.
TriangleMesh loft_two_rings(double r0, double r1, double y0, double y1, int n, double cx,
                            double cz) {
  TriangleMesh m;
  const auto un = static_cast<std::uint32_t>(n);
  for (double y : {y0, y1}) {
    const double r = (y == y0) ? r0 : r1;
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * std::numbers::pi * k / n;
      m.vertices.push_back({cx + r * std::cos(t), y, cz + r * std::sin(t)});
    }
  }
  const std::uint32_t bottom = static_cast<std::uint32_t>(m.vertices.size());
  m.vertices.push_back({cx, y0, cz});
  const std::uint32_t top = bottom + 1;
  m.vertices.push_back({cx, y1, cz});
  for (std::uint32_t k = 0; k < un; ++k) {
    const std::uint32_t k1 = (k + 1) % un;
    m.faces.push_back({k, k1, un + k1});
    m.faces.push_back({k, un + k1, un + k});
    m.faces.push_back({bottom, k1, k});
    m.faces.push_back({top, un + k, un + k1});
  }
  return m;
}

}  // namespace

TriangleMesh cylinder(double radius, double y0, double y1, int segments, double cx, double cz) {
  return loft_two_rings(radius, radius, y0, y1, segments, cx, cz);
}

TriangleMesh frustum(double r0, double r1, double y0, double y1, int segments) {
  return loft_two_rings(r0, r1, y0, y1, segments, 0.0, 0.0);
}

TriangleMesh box(Vec3 lo, Vec3 hi) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back({(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z});
  }
  // Two triangles per side.
  m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
             {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

TriangleMesh sphere(Vec3 center, double radius, int segments, int rings) {
  TriangleMesh m;
  m.vertices.push_back(center + Vec3{0, -radius, 0});
  for (int r = 1; r < rings; ++r) {
    const double phi = std::numbers::pi * r / rings - std::numbers::pi / 2;
    for (int k = 0; k < segments; ++k) {
      const double t = 2.0 * std::numbers::pi * k / segments;
      m.vertices.push_back(center + Vec3{radius * std::cos(phi) * std::cos(t),
                                         radius * std::sin(phi),
                                         radius * std::cos(phi) * std::sin(t)});
    }
  }
  m.vertices.push_back(center + Vec3{0, radius, 0});
  const auto s = static_cast<std::uint32_t>(segments);
  const auto ring = [s](int r, std::uint32_t k) { return 1 + static_cast<std::uint32_t>(r) * s + k % s; };
  const auto last = static_cast<std::uint32_t>(m.vertices.size() - 1);
  for (std::uint32_t k = 0; k < s; ++k) {
    m.faces.push_back({0, ring(0, k + 1), ring(0, k)});
    for (int r = 0; r + 2 < rings; ++r) {
      m.faces.push_back({ring(r, k), ring(r, k + 1), ring(r + 1, k + 1)});
      m.faces.push_back({ring(r, k), ring(r + 1, k + 1), ring(r + 1, k)});
    }
    m.faces.push_back({last, ring(rings - 2, k), ring(rings - 2, k + 1)});
  }
  return m;
}

}  // namespace bm::primitives
