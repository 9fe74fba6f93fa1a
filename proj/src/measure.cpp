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

#include "bodymeasure/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "bodymeasure/errors.hpp"

namespace bm {

int measurement_index(std::string_view name) {
  for (std::size_t i = 0; i < kMeasurementNames.size(); ++i) {
    if (kMeasurementNames[i] == name) return static_cast<int>(i);
  }
  throw LookupError("unknown measurement '" + std::string(name) + "'");
}

void MeasurementSet::set(std::string_view name, double cm) {
  measurement_index(name);
  values_[std::string(name)] = cm;
}

double MeasurementSet::at(std::string_view name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw LookupError("measurement '" + std::string(name) + "' missing");
  return it->second;
}

std::array<double, kNumMeasurements> MeasurementSet::to_vector() const {
  std::array<double, kNumMeasurements> out{};
  for (std::size_t i = 0; i < kNumMeasurements; ++i) out[i] = at(kMeasurementNames[i]);
  return out;
}

MeasurementSet MeasurementSet::from_vector(const std::array<double, kNumMeasurements>& v) {
  MeasurementSet m;
  for (std::size_t i = 0; i < kNumMeasurements; ++i) m.set(kMeasurementNames[i], v[i]);
  return m;
}

void MeasurementSet::validate() const {
  if (values_.size() != kNumMeasurements) {
    throw ValidationError("measurement set has " + std::to_string(values_.size()) +
                          " entries, expected 16");
  }
  for (std::string_view name : kMeasurementNames) {
    const double v = at(name);
    if (!std::isfinite(v) || v <= 0.0) {
      throw ValidationError("measurement '" + std::string(name) + "' must be finite and positive");
    }
  }
}

// ---------------------------------------------------------------------------
// Slicing

std::vector<Point2> CrossSection::component(int id) const {
  std::vector<Point2> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (component_of[i] == id) out.push_back(points[i]);
  }
  return out;
}

int CrossSection::nearest_component(Point2 reference) const {
  std::vector<double> su(component_count, 0.0), sv(component_count, 0.0);
  std::vector<int> count(component_count, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    su[component_of[i]] += points[i].u;
    sv[component_of[i]] += points[i].v;
    ++count[component_of[i]];
  }
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < component_count; ++c) {
    const double d = std::hypot(su[c] / count[c] - reference.u, sv[c] / count[c] - reference.v);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {

struct DisjointSets {
  std::vector<int> parent;
  int add() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

CrossSection cross_section(const TriangleMesh& mesh, Axis axis, double level) {
  if (mesh.empty()) throw InvalidArgument("cross section of an empty mesh");

  CrossSection section;
  section.axis = axis;
  section.level = level;
  // Vertices exactly on the plane count as above it, so every crossing face
  // has exactly two crossing edges.
  auto above = [&](std::uint32_t i) { return coord(mesh.vertices[i], axis) >= level; };

  std::unordered_map<std::uint64_t, int> edge_point;
  DisjointSets sets;
  auto point_on = [&](std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
    auto [it, inserted] = edge_point.try_emplace(key, 0);
    if (inserted) {
      const Vec3& pa = mesh.vertices[a];
      const Vec3& pb = mesh.vertices[b];
      const double ca = coord(pa, axis), cb = coord(pb, axis);
      const double t = (level - ca) / (cb - ca);
      section.points.push_back(project(pa + t * (pb - pa), axis));
      it->second = sets.add();
    }
    return it->second;
  };

  for (const Face& f : mesh.faces) {
    const bool s0 = above(f[0]), s1 = above(f[1]), s2 = above(f[2]);
    if (s0 == s1 && s1 == s2) continue;
    int ends[2];
    int n = 0;
    if (s0 != s1) ends[n++] = point_on(f[0], f[1]);
    if (s1 != s2) ends[n++] = point_on(f[1], f[2]);
    if (s2 != s0) ends[n++] = point_on(f[2], f[0]);
    sets.unite(ends[0], ends[1]);
  }
  if (section.points.empty()) {
    throw EmptySectionError("plane at " + std::to_string(level) + " misses the mesh");
  }

  std::unordered_map<int, int> label;
  section.component_of.resize(section.points.size());
  for (std::size_t i = 0; i < section.points.size(); ++i) {
    const int root = sets.find(static_cast<int>(i));
    auto [it, inserted] = label.try_emplace(root, static_cast<int>(label.size()));
    section.component_of[i] = it->second;
  }
  section.component_count = static_cast<int>(label.size());
  return section;
}

double circumference_at(const TriangleMesh& mesh, double y) {
  return hull_perimeter(cross_section(mesh, Axis::kY, y).points);
}

constexpr double kTieTolerance = 1e-9;

ExtremalCircumference extremal_circumference(const TriangleMesh& mesh, double y_min, double y_max,
                                             Extremum mode, int levels) {
  if (!(y_min < y_max)) throw InvalidArgument("extremal_circumference: y_min must be < y_max");
  if (levels < 2) throw InvalidArgument("extremal_circumference: levels must be >= 2");
  if (mesh.empty()) throw InvalidArgument("extremal_circumference: empty mesh");

  bool found = false;
  ExtremalCircumference best;
  for (int i = 0; i < levels; ++i) {
    const double y = i + 1 == levels ? y_max : y_min + (y_max - y_min) * i / (levels - 1);
    double c;
    try {
      c = circumference_at(mesh, y);
    } catch (const EmptySectionError&) {
      continue;
    }
    // Slices of a constant section differ by rounding only; treat those as
    // ties so the lowest level wins.
    const double margin = kTieTolerance * std::abs(best.circumference);
    const bool better = mode == Extremum::kMinimal ? c < best.circumference - margin
                                                   : c > best.circumference + margin;
    if (!found || better) {
      best = {y, c};
      found = true;
    }
  }
  if (!found) {
    throw EmptyRegionError("region [" + std::to_string(y_min) + ", " + std::to_string(y_max) +
                           "] does not intersect the mesh");
  }
  return best;
}

double joint_distance(const Skeleton& skeleton, std::string_view a, std::string_view b) {
  return (skeleton.at(a) - skeleton.at(b)).norm();
}

GirthLevels girth_levels(const Skeleton& s) {
  namespace lm = landmarks;
  const Vec3& neck = s.at("neck");
  const Vec3& head = s.at("head");
  const Vec3& pelvis = s.at("pelvis");
  const Vec3& hip = s.at("hip_left");
  const Vec3& ankle = s.at("ankle_left");
  const Vec3& shoulder = s.at("shoulder_left");
  const Vec3& wrist = s.at("wrist_left");
  const double span = hip.y - ankle.y;
  const double arm = wrist.x - shoulder.x;
  GirthLevels g;
  g.head_y = head.y;
  g.neck_y = neck.y + lm::kNeckGirthFraction * (head.y - neck.y);
  g.chest_y = neck.y - lm::kChestFraction * (neck.y - pelvis.y);
  g.thigh_y = hip.y - lm::kThighFraction * span;
  g.calf_y = ankle.y + lm::kCalfFraction * span;
  g.ankle_y = ankle.y + lm::kAnkleGirthFraction * span;
  g.bicep_x = shoulder.x + lm::kBicepFraction * arm;
  g.forearm_x = shoulder.x + lm::kForearmFraction * arm;
  g.wrist_x = shoulder.x + lm::kWristGirthFraction * arm;
  return g;
}

namespace {

// Hull perimeter of the single loop nearest `reference` in the section.
double limb_girth(const TriangleMesh& mesh, Axis axis, double level, Point2 reference) {
  const CrossSection section = cross_section(mesh, axis, level);
  return hull_perimeter(section.component(section.nearest_component(reference)));
}

}  // namespace

MeasurementSet measure_all(const BodyMesh& body, const MeasureConfig& config) {
  const TriangleMesh& mesh = body.mesh;
  const Skeleton& sk = body.skeleton;
  if (mesh.empty()) throw InvalidArgument("measure_all: empty mesh");
  for (std::string_view j : kRequiredJoints) sk.at(j);

  const auto [lo, hi] = std::minmax_element(
      mesh.vertices.begin(), mesh.vertices.end(),
      [](const Vec3& a, const Vec3& b) { return a.y < b.y; });
  const double stature = hi->y - lo->y;

  MeasurementSet m;
  const double mid = sk.at("mid_spine").y;
  const double half = config.waist_region_fraction * stature;
  m.set("waist_circumference",
        extremal_circumference(mesh, mid - half, mid + half, Extremum::kMinimal, config.levels)
            .circumference);
  const double hip_y = sk.at("hip_left").y;
  const double pelvis_y = sk.at("pelvis").y;
  m.set("pelvis_circumference",
        extremal_circumference(mesh, std::min(hip_y, pelvis_y), std::max(hip_y, pelvis_y),
                               Extremum::kMaximal, config.levels)
            .circumference);
  m.set("shoulder_to_wrist", joint_distance(sk, "shoulder_left", "wrist_left"));
  m.set("torso_length", joint_distance(sk, "neck", "pelvis"));
  m.set("leg_length", joint_distance(sk, "pelvis", "ankle_left"));
  m.set("stature", stature);

  const GirthLevels g = girth_levels(sk);
  const Vec3& head = sk.at("head");
  const Vec3& neck = sk.at("neck");
  const Vec3& ankle = sk.at("ankle_left");
  const Vec3& shoulder = sk.at("shoulder_left");
  const Point2 trunk_axis{neck.x, neck.z};
  const Point2 leg_axis{ankle.x, ankle.z};
  const Point2 arm_axis{shoulder.y, shoulder.z};
  m.set("head_circumference", limb_girth(mesh, Axis::kY, g.head_y, {head.x, head.z}));
  m.set("neck_circumference", limb_girth(mesh, Axis::kY, g.neck_y, trunk_axis));
  m.set("chest_circumference", limb_girth(mesh, Axis::kY, g.chest_y, trunk_axis));
  m.set("thigh_circumference", limb_girth(mesh, Axis::kY, g.thigh_y, leg_axis));
  m.set("calf_circumference", limb_girth(mesh, Axis::kY, g.calf_y, leg_axis));
  m.set("ankle_circumference", limb_girth(mesh, Axis::kY, g.ankle_y, leg_axis));
  m.set("bicep_circumference", limb_girth(mesh, Axis::kX, g.bicep_x, arm_axis));
  m.set("forearm_circumference", limb_girth(mesh, Axis::kX, g.forearm_x, arm_axis));
  m.set("wrist_circumference", limb_girth(mesh, Axis::kX, g.wrist_x, arm_axis));
  m.set("shoulder_width", joint_distance(sk, "shoulder_left", "shoulder_right"));
  m.validate();
  return m;
}

}  // namespace bm
