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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bodymeasure/geometry.hpp"

namespace bm {

enum class Sex { kMale, kFemale };

std::string_view to_string(Sex sex);
Sex parse_sex(std::string_view text);

inline constexpr std::array<std::string_view, 9> kAuxGirthNames = {
    "head", "neck", "chest", "thigh", "calf", "bicep", "forearm", "wrist", "ankle"};

// Generative parameters of one synthetic person. All values in cm.
struct BodySpec {
  Sex sex = Sex::kMale;
  double stature = 0.0;
  double torso_len = 0.0;  // neck -> pelvis
  double leg_len = 0.0;    // pelvis -> ankle
  double arm_len = 0.0;    // shoulder -> wrist
  double waist_circ = 0.0;
  double pelvis_circ = 0.0;
  std::map<std::string, double, std::less<>> aux_girths;  // keyed by kAuxGirthNames
  double shoulder_width = 0.0;
  std::uint64_t seed = 0;

  double aux(std::string_view name) const;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

// Per-sex [min, max] for every sampled parameter. Keys are the config-file
// names: stature, torso_len, leg_len, arm_len, waist_circ, pelvis_circ,
// shoulder_width and <girth>_circ for each auxiliary girth.
struct GenerationRanges {
  int version = 1;
  std::map<std::string, Range, std::less<>> male;
  std::map<std::string, Range, std::less<>> female;

  const std::map<std::string, Range, std::less<>>& for_sex(Sex sex) const {
    return sex == Sex::kMale ? male : female;
  }
};

std::vector<std::string> range_parameter_names();

GenerationRanges parse_generation_ranges(std::string_view json_text);
GenerationRanges load_generation_ranges(const std::filesystem::path& path);
// The versioned ranges shipped with the project (config/body_ranges.v1.json).
const GenerationRanges& default_generation_ranges();
std::string_view default_generation_ranges_text();
std::string serialize_generation_ranges(const GenerationRanges& ranges);

// Throws ConfigError on missing keys, nonpositive bounds or min > max.
void validate_ranges(const GenerationRanges& ranges);

struct Skeleton {
  std::map<std::string, Vec3, std::less<>> joints;

  // Throws LookupError for unknown names.
  const Vec3& at(std::string_view name) const;
  bool has(std::string_view name) const { return joints.find(name) != joints.end(); }
};

inline constexpr std::array<std::string_view, 11> kRequiredJoints = {
    "neck",        "mid_spine",      "pelvis",     "hip_left",    "hip_right",  "shoulder_left",
    "shoulder_right", "wrist_left", "wrist_right", "ankle_left", "ankle_right"};

// Triangle mesh in cm, Y up, Z toward the camera, with its skeleton.
struct BodyMesh {
  TriangleMesh mesh;
  Skeleton skeleton;
};

// Throws ValidationError when a BodySpec field invariant fails or when the
// segment lengths leave no room to lay out the body.
void validate_spec(const BodySpec& spec);
// Same checks without throwing; returns the first violated constraint.
std::optional<std::string> spec_problem(const BodySpec& spec);

// Deterministic in (sex, seed, ranges). Draws are rejected until the body is
// buildable; throws ConfigError if the ranges never admit one.
BodySpec sample_body_spec(Sex sex, std::uint64_t seed, const GenerationRanges& ranges);

inline constexpr int kMinResolution = 16;

BodyMesh build_body(const BodySpec& spec, int resolution);

void write_obj(const BodyMesh& body, const std::filesystem::path& path);

}  // namespace bm
