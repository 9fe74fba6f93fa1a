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
#include <cmath>
#include <cstdint>
#include <vector>

namespace bm {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double k, Vec3 a) { return {k * a.x, k * a.y, k * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

// A point in a slicing plane. For horizontal slices (u, v) = (x, z).
struct Point2 {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

enum class Axis { kX, kY, kZ };

inline double coord(const Vec3& p, Axis axis) {
  switch (axis) {
    case Axis::kX: return p.x;
    case Axis::kY: return p.y;
    case Axis::kZ: return p.z;
  }
  return 0.0;
}

// Drops the `axis` coordinate: Y slices give (x, z), X slices give (y, z).
inline Point2 project(const Vec3& p, Axis axis) {
  switch (axis) {
    case Axis::kX: return {p.y, p.z};
    case Axis::kY: return {p.x, p.z};
    case Axis::kZ: return {p.x, p.y};
  }
  return {};
}

using Face = std::array<std::uint32_t, 3>;

// Plain triangle soup container shared by the generator, slicer and renderer.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  bool empty() const { return vertices.empty() || faces.empty(); }

  // Appends `other`, offsetting its indices.
  void append(const TriangleMesh& other);
};

std::vector<Point2> convex_hull(std::vector<Point2> points);
double polygon_perimeter(const std::vector<Point2>& closed_polygon);
double hull_perimeter(const std::vector<Point2>& points);

}  // namespace bm
