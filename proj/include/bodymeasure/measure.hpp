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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bodymeasure/bodygen.hpp"
#include "bodymeasure/geometry.hpp"

namespace bm {

// The 16 annotated measurements. The first five are the canonical ones; the
// order here is the order of the regression target vector.
inline constexpr std::array<std::string_view, 16> kMeasurementNames = {
    "waist_circumference",   "pelvis_circumference", "shoulder_to_wrist",
    "torso_length",          "leg_length",           "stature",
    "head_circumference",    "neck_circumference",   "chest_circumference",
    "thigh_circumference",   "calf_circumference",   "bicep_circumference",
    "forearm_circumference", "wrist_circumference",  "ankle_circumference",
    "shoulder_width"};

inline constexpr std::array<std::string_view, 5> kCanonicalMeasurements = {
    "waist_circumference", "pelvis_circumference", "shoulder_to_wrist", "torso_length",
    "leg_length"};

inline constexpr std::size_t kNumMeasurements = kMeasurementNames.size();

int measurement_index(std::string_view name);  // throws LookupError

class MeasurementSet {
 public:
  MeasurementSet() = default;

  void set(std::string_view name, double cm);
  double at(std::string_view name) const;  // throws LookupError
  bool has(std::string_view name) const { return values_.find(name) != values_.end(); }
  std::size_t size() const { return values_.size(); }
  const std::map<std::string, double, std::less<>>& values() const { return values_; }

  // Values in kMeasurementNames order; requires all 16 keys.
  std::array<double, kNumMeasurements> to_vector() const;
  static MeasurementSet from_vector(const std::array<double, kNumMeasurements>& v);

  // Exactly the 16 known keys, all finite and positive.
  void validate() const;

  friend bool operator==(const MeasurementSet&, const MeasurementSet&) = default;

 private:
  std::map<std::string, double, std::less<>> values_;
};

struct CrossSection {
  Axis axis = Axis::kY;
  double level = 0.0;
  std::vector<Point2> points;
  std::vector<int> component_of;  // parallel to points
  int component_count = 0;

  // Points of one intersection loop.
  std::vector<Point2> component(int id) const;
  // The loop whose centroid is nearest `reference`.
  int nearest_component(Point2 reference) const;
};

// Slices with the plane {axis = level}. Throws InvalidArgument on an empty
// mesh and EmptySectionError when the plane misses it.
CrossSection cross_section(const TriangleMesh& mesh, Axis axis, double level);
inline CrossSection cross_section(const TriangleMesh& mesh, double y) {
  return cross_section(mesh, Axis::kY, y);
}

// Tape-measure girth: perimeter of the convex hull of the section at Y = y.
double circumference_at(const TriangleMesh& mesh, double y);

enum class Extremum { kMinimal, kMaximal };

struct ExtremalCircumference {
  double level = 0.0;
  double circumference = 0.0;
};

// Samples `levels` uniformly spaced heights in [y_min, y_max] (both ends
// included). Heights where the plane misses the mesh are skipped. Ties go to
// the lower height.
ExtremalCircumference extremal_circumference(const TriangleMesh& mesh, double y_min, double y_max,
                                             Extremum mode, int levels);

double joint_distance(const Skeleton& skeleton, std::string_view a, std::string_view b);

struct MeasureConfig {
  double waist_region_fraction = 0.05;  // half-height of the waist search band, x stature
  int levels = 64;
};

MeasurementSet measure_all(const BodyMesh& body, const MeasureConfig& config = {});

// Where the auxiliary girths are taken, derived from the skeleton only. The
// generator builds constant-girth bands around these so the two agree.
struct GirthLevels {
  double head_y = 0.0;
  double neck_y = 0.0;
  double chest_y = 0.0;
  double thigh_y = 0.0;
  double calf_y = 0.0;
  double ankle_y = 0.0;
  double bicep_x = 0.0;  // left arm, X slices
  double forearm_x = 0.0;
  double wrist_x = 0.0;
};

GirthLevels girth_levels(const Skeleton& skeleton);

namespace landmarks {
inline constexpr double kNeckGirthFraction = 0.23;   // of neck -> head centre
inline constexpr double kChestFraction = 0.24;       // of torso, below the neck
inline constexpr double kThighFraction = 0.16;       // of hip -> ankle, below the hip
inline constexpr double kCalfFraction = 0.32;        // of hip -> ankle, above the ankle
inline constexpr double kAnkleGirthFraction = 0.07;  // of hip -> ankle, above the ankle
inline constexpr double kBicepFraction = 0.28;       // of arm, from the shoulder
inline constexpr double kForearmFraction = 0.62;
inline constexpr double kWristGirthFraction = 0.95;
}  // namespace landmarks

}  // namespace bm
