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

#include "bodymeasure/bodygen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>
#include <variant>

#include "bodymeasure/errors.hpp"
#include "bodymeasure/measure.hpp"
#include "bodymeasure/rng.hpp"

namespace bm {

std::string_view to_string(Sex sex) { return sex == Sex::kMale ? "male" : "female"; }

Sex parse_sex(std::string_view text) {
  if (text == "male" || text == "m") return Sex::kMale;
  if (text == "female" || text == "f") return Sex::kFemale;
  throw InvalidArgument("unknown sex '" + std::string(text) + "'");
}

double BodySpec::aux(std::string_view name) const {
  const auto it = aux_girths.find(name);
  if (it == aux_girths.end()) throw LookupError("body spec has no girth '" + std::string(name) + "'");
  return it->second;
}

const Vec3& Skeleton::at(std::string_view name) const {
  const auto it = joints.find(name);
  if (it == joints.end()) throw LookupError("unknown joint '" + std::string(name) + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Generation ranges

std::vector<std::string> range_parameter_names() {
  std::vector<std::string> names = {"stature",    "torso_len",   "leg_len",       "arm_len",
                                    "waist_circ", "pelvis_circ", "shoulder_width"};
  for (std::string_view g : kAuxGirthNames) names.push_back(std::string(g) + "_circ");
  return names;
}

void validate_ranges(const GenerationRanges& ranges) {
  const auto names = range_parameter_names();
  for (Sex sex : {Sex::kMale, Sex::kFemale}) {
    const auto& table = ranges.for_sex(sex);
    for (const auto& name : names) {
      const auto it = table.find(name);
      if (it == table.end()) {
        throw ConfigError("ranges." + std::string(to_string(sex)) + " is missing '" + name + "'");
      }
      const Range& r = it->second;
      if (!(r.min > 0.0) || !std::isfinite(r.max)) {
        throw ConfigError("ranges." + std::string(to_string(sex)) + "." + name +
                          ": bounds must be positive");
      }
      if (r.min > r.max) {
        throw ConfigError("ranges." + std::string(to_string(sex)) + "." + name + ": min > max");
      }
    }
    for (const auto& [key, r] : table) {
      if (std::find(names.begin(), names.end(), key) == names.end()) {
        throw ConfigError("ranges." + std::string(to_string(sex)) + ": unknown parameter '" + key +
                          "'");
      }
    }
  }
}

GenerationRanges parse_generation_ranges(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("generation ranges: ") + e.what());
  }
  GenerationRanges out;
  try {
    out.version = doc.value("version", 1);
    for (Sex sex : {Sex::kMale, Sex::kFemale}) {
      const std::string key(to_string(sex));
      if (!doc.contains(key)) throw ConfigError("generation ranges: missing table '" + key + "'");
      auto& table = sex == Sex::kMale ? out.male : out.female;
      for (const auto& [name, value] : doc.at(key).items()) {
        if (!value.is_array() || value.size() != 2) {
          throw ConfigError("ranges." + key + "." + name + ": expected [min, max]");
        }
        table[name] = Range{value[0].get<double>(), value[1].get<double>()};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("generation ranges: ") + e.what());
  }
  validate_ranges(out);
  return out;
}

GenerationRanges load_generation_ranges(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_generation_ranges(ss.str());
}

const GenerationRanges& default_generation_ranges() {
  static const GenerationRanges ranges = parse_generation_ranges(default_generation_ranges_text());
  return ranges;
}

std::string serialize_generation_ranges(const GenerationRanges& ranges) {
  nlohmann::ordered_json doc;
  doc["version"] = ranges.version;
  for (Sex sex : {Sex::kMale, Sex::kFemale}) {
    nlohmann::ordered_json table = nlohmann::ordered_json::object();
    for (const auto& [name, r] : ranges.for_sex(sex)) table[name] = {r.min, r.max};
    doc[std::string(to_string(sex))] = table;
  }
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Layout

namespace {

constexpr double kPi = std::numbers::pi;

double ngon_radius_for_perimeter(double perimeter, int n) {
  return perimeter / (2.0 * n * std::sin(kPi / n));
}

// Perimeter of the n-vertex polygon inscribed in the ellipse with semi-axes
// (1, aspect).
double unit_ellipse_polygon_perimeter(double aspect, int n) {
  double total = 0.0;
  double px = 1.0, pz = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double t = 2.0 * kPi * k / n;
    const double x = std::cos(t), z = aspect * std::sin(t);
    total += std::hypot(x - px, z - pz);
    px = x;
    pz = z;
  }
  return total;
}

struct SexShape {
  double pelvis_aspect, waist_aspect, chest_aspect;
};

constexpr double kShoulderAspect = 0.42;
constexpr double kNeckAspect = 0.95;
constexpr double kHeadAspect = 1.18;

SexShape shape_for(Sex sex) {
  return sex == Sex::kMale ? SexShape{0.72, 0.78, 0.68} : SexShape{0.70, 0.72, 0.72};
}

// Every height and offset the mesh builder needs, derived from a spec.
struct Layout {
  double hx = 0.0;  // lateral offset of the leg axes
  double ankle_y = 0.0;
  double pelvis_y = 0.0;
  double hip_y = 0.0;
  double crotch_y = 0.0;
  double neck_y = 0.0;
  double mid_y = 0.0;
  double shoulder_y = 0.0;
  double head_room = 0.0;  // neck joint -> crown
  double head_bottom = 0.0;
  double head_center = 0.0;
  double head_height = 0.0;
  double waist_guard = 0.0;
  double arm_root_radius = 0.0;
  double knee_y = 0.0;
  double elbow_x = 0.0;
  Skeleton skeleton;
  GirthLevels levels;
};

constexpr double kAnkleHeightFraction = 0.04;  // of stature
constexpr double kHipDropFraction = 0.06;      // of leg length, hip joint below pelvis joint
constexpr double kCrotchBelowHip = 2.5;
constexpr double kLegOverlap = 1.5;
constexpr double kShoulderDropFraction = 0.06;  // of torso length
constexpr double kNeckShare = 0.3;              // of neck -> crown
constexpr double kWaistGuardFraction = 0.06;    // of stature
constexpr double kThighGap = 1.0;
constexpr double kMinHeadRoomFraction = 0.1;

// Returns the layout or a description of the first violated constraint.
std::variant<Layout, std::string> plan_layout(const BodySpec& s) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  for (auto [name, v] :
       {std::pair{"stature", s.stature}, {"torso_len", s.torso_len}, {"leg_len", s.leg_len},
        {"arm_len", s.arm_len}, {"waist_circ", s.waist_circ}, {"pelvis_circ", s.pelvis_circ},
        {"shoulder_width", s.shoulder_width}}) {
    if (!positive(v)) return std::string(name) + " must be positive";
  }
  for (std::string_view g : kAuxGirthNames) {
    const auto it = s.aux_girths.find(g);
    if (it == s.aux_girths.end()) return "missing girth '" + std::string(g) + "'";
    if (!positive(it->second)) return std::string(g) + " girth must be positive";
  }
  if (s.aux_girths.size() != kAuxGirthNames.size()) return std::string("unexpected girth keys");
  if (!(s.torso_len + s.leg_len < s.stature)) return std::string("torso_len + leg_len must be below stature");

  Layout l;
  const double S = s.stature, T = s.torso_len, L = s.leg_len, A = s.arm_len;
  l.hx = s.aux("thigh") / (2.0 * kPi) + kThighGap;
  if (!(L > l.hx + 1.0)) return std::string("leg_len too short for the thigh girth");
  l.ankle_y = kAnkleHeightFraction * S;
  l.pelvis_y = l.ankle_y + std::sqrt(L * L - l.hx * l.hx);
  l.hip_y = l.pelvis_y - kHipDropFraction * L;
  l.crotch_y = l.hip_y - kCrotchBelowHip;
  l.neck_y = l.pelvis_y + T;
  l.mid_y = l.pelvis_y + 0.5 * T;
  l.shoulder_y = l.neck_y - kShoulderDropFraction * T;
  l.head_room = S - l.neck_y;
  if (l.head_room < kMinHeadRoomFraction * S) return std::string("no room for head and neck");
  l.head_bottom = l.neck_y + kNeckShare * l.head_room;
  l.head_height = (1.0 - kNeckShare) * l.head_room;
  l.head_center = l.head_bottom + 0.5 * l.head_height;
  l.waist_guard = kWaistGuardFraction * S;
  l.arm_root_radius = 1.1 * s.aux("bicep") / (2.0 * kPi);

  const double sx = 0.5 * s.shoulder_width;
  auto& j = l.skeleton.joints;
  j["pelvis"] = {0.0, l.pelvis_y, 0.0};
  j["neck"] = {0.0, l.neck_y, 0.0};
  j["mid_spine"] = {0.0, 0.5 * (l.pelvis_y + l.neck_y), 0.0};
  j["hip_left"] = {l.hx, l.hip_y, 0.0};
  j["hip_right"] = {-l.hx, l.hip_y, 0.0};
  j["ankle_left"] = {l.hx, l.ankle_y, 0.0};
  j["ankle_right"] = {-l.hx, l.ankle_y, 0.0};
  j["shoulder_left"] = {sx, l.shoulder_y, 0.0};
  j["shoulder_right"] = {-sx, l.shoulder_y, 0.0};
  j["wrist_left"] = {sx + A, l.shoulder_y, 0.0};
  j["wrist_right"] = {-sx - A, l.shoulder_y, 0.0};
  j["head"] = {0.0, l.head_center, 0.0};
  l.mid_y = j["mid_spine"].y;
  l.levels = girth_levels(l.skeleton);
  const GirthLevels& g = l.levels;
  const double span = l.hip_y - l.ankle_y;
  l.knee_y = l.ankle_y + 0.55 * span;
  l.elbow_x = sx + 0.45 * A;

  // Constant-girth bands must not overlap each other or the arms.
  struct Order {
    double lower, upper;
    const char* what;
  };
  const Order checks[] = {
      {l.ankle_y + 0.25, g.ankle_y - 0.75, "ankle band above the ankle joint"},
      {g.ankle_y + 0.75 + 0.5, g.calf_y - 1.0, "calf band above the ankle band"},
      {g.calf_y + 1.0 + 0.5, l.knee_y, "knee above the calf band"},
      {l.knee_y + 0.5, g.thigh_y - 1.0, "thigh band above the knee"},
      {g.thigh_y + 1.0, l.crotch_y, "thigh band below the crotch"},
      {l.pelvis_y + 1.0 + 0.5, l.mid_y - l.waist_guard, "pelvis band below the waist guard"},
      {l.mid_y + l.waist_guard + 0.5, g.chest_y - 1.0, "chest band above the waist guard"},
      {g.chest_y + 1.0 + 0.5, l.shoulder_y - l.arm_root_radius, "chest band below the arms"},
      {l.neck_y + 1.5 + 0.5, g.neck_y, "neck band above the torso top"},
      {g.neck_y + 0.5, l.head_bottom, "neck band below the head"},
      {sx - l.arm_root_radius, sx, "arm root outside the body centre"},
      {0.5, sx - l.arm_root_radius, "shoulders wider than the upper arm"},
      {sx + 0.5, g.bicep_x - 1.0, "bicep band beyond the shoulder"},
      {g.bicep_x + 1.5, l.elbow_x, "elbow beyond the bicep band"},
      {l.elbow_x + 0.5, g.forearm_x - 1.0, "forearm band beyond the elbow"},
      {g.forearm_x + 1.5, g.wrist_x - 0.75, "wrist band beyond the forearm band"},
      {g.wrist_x + 0.75, sx + A, "wrist band before the wrist joint"},
  };
  for (const Order& c : checks) {
    if (!(c.lower < c.upper)) return std::string("layout infeasible: ") + c.what;
  }
  return l;
}

// ---------------------------------------------------------------------------
// Lofting

// One cross-section of a generalized cylinder. `girth` is the exact polygon
// perimeter of the ring; `aspect` is the ratio of the second to the first
// semi-axis; (c1, c2) is the ring centre in the plane coordinates.
struct Station {
  double level;
  double girth;
  double aspect = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

enum class CapKind { kFlat, kApex };
struct Cap {
  CapKind kind = CapKind::kFlat;
  double apex_level = 0.0;
};

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

Station lerp(const Station& a, const Station& b, double level) {
  const double s = smoothstep((level - a.level) / (b.level - a.level));
  auto mix = [s](double p, double q) { return p == q ? p : p + s * (q - p); };
  return {level, mix(a.girth, b.girth), mix(a.aspect, b.aspect), mix(a.c1, b.c1), mix(a.c2, b.c2)};
}

Vec3 place(Axis axis, double level, double p1, double p2) {
  return axis == Axis::kY ? Vec3{p1, level, p2} : Vec3{level, p1, p2};
}

TriangleMesh loft(Axis axis, const std::vector<Station>& stations, int n, Cap start, Cap end,
                  double max_step) {
  std::vector<Station> rings;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    rings.push_back(stations[i]);
    if (i + 1 == stations.size()) break;
    const Station& a = stations[i];
    const Station& b = stations[i + 1];
    const int pieces = std::max(1, static_cast<int>(std::ceil((b.level - a.level) / max_step)));
    for (int p = 1; p < pieces; ++p) {
      rings.push_back(lerp(a, b, a.level + (b.level - a.level) * p / pieces));
    }
  }

  TriangleMesh m;
  const auto un = static_cast<std::uint32_t>(n);
  for (const Station& r : rings) {
    const double a = r.girth / unit_ellipse_polygon_perimeter(r.aspect, n);
    const double b = r.aspect * a;
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * kPi * k / n;
      m.vertices.push_back(place(axis, r.level, r.c1 + a * std::cos(t), r.c2 + b * std::sin(t)));
    }
  }
  for (std::uint32_t r = 0; r + 1 < rings.size(); ++r) {
    const std::uint32_t base = r * un;
    for (std::uint32_t k = 0; k < un; ++k) {
      const std::uint32_t k1 = (k + 1) % un;
      m.faces.push_back({base + k, base + un + k1, base + k1});
      m.faces.push_back({base + k, base + un + k, base + un + k1});
    }
  }
  auto cap = [&](const Station& ring, std::uint32_t base, Cap c, bool flip) {
    const double level = c.kind == CapKind::kApex ? c.apex_level : ring.level;
    const auto centre = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.push_back(place(axis, level, ring.c1, ring.c2));
    for (std::uint32_t k = 0; k < un; ++k) {
      const std::uint32_t k1 = (k + 1) % un;
      if (flip) {
        m.faces.push_back({centre, base + k1, base + k});
      } else {
        m.faces.push_back({centre, base + k, base + k1});
      }
    }
  };
  cap(rings.front(), 0, start, false);
  cap(rings.back(), static_cast<std::uint32_t>(rings.size() - 1) * un, end, true);
  return m;
}

TriangleMesh mirror_x(TriangleMesh m) {
  for (Vec3& v : m.vertices) v.x = -v.x;
  for (Face& f : m.faces) std::swap(f[1], f[2]);
  return m;
}

constexpr double kMaxRingStep = 2.0;

TriangleMesh build_torso(const BodySpec& s, const Layout& l, int n) {
  const SexShape shape = shape_for(s.sex);
  const double chest = s.aux("chest");
  const double shoulder_girth =
      0.5 * s.shoulder_width * unit_ellipse_polygon_perimeter(kShoulderAspect, n);
  const double pelvis = s.pelvis_circ, waist = s.waist_circ;
  const GirthLevels& g = l.levels;
  const std::vector<Station> st = {
      {l.crotch_y, 0.9 * pelvis, shape.pelvis_aspect},
      {l.hip_y - 1.0, pelvis, shape.pelvis_aspect},
      {l.pelvis_y + 1.0, pelvis, shape.pelvis_aspect},
      // Shoulders of the waist valley: never below the waist girth, so the
      // minimum over the waist band sits on the constant-girth plateau.
      {l.mid_y - l.waist_guard, 1.01 * std::max(waist, pelvis), shape.waist_aspect},
      {l.mid_y - 1.0, waist, shape.waist_aspect},
      {l.mid_y + 1.0, waist, shape.waist_aspect},
      {l.mid_y + l.waist_guard, 1.01 * std::max(waist, chest), shape.chest_aspect},
      {g.chest_y - 1.0, chest, shape.chest_aspect},
      {g.chest_y + 1.0, chest, shape.chest_aspect},
      {l.shoulder_y, shoulder_girth, kShoulderAspect},
      {l.neck_y + 1.5, s.aux("neck"), kNeckAspect},
  };
  return loft(Axis::kY, st, n, {}, {}, kMaxRingStep);
}

TriangleMesh build_neck(const BodySpec& s, const Layout& l, int n) {
  const double neck = s.aux("neck");
  const std::vector<Station> st = {{l.neck_y - 2.0, neck, kNeckAspect},
                                   {l.head_bottom + 1.5, neck, kNeckAspect}};
  return loft(Axis::kY, st, n, {}, {}, kMaxRingStep);
}

TriangleMesh build_head(const BodySpec& s, const Layout& l, int n, double stature) {
  const double head = s.aux("head");
  const double half = 0.5 * l.head_height;
  const double plateau = std::min(0.5, 0.1 * half) / half;
  std::vector<Station> st;
  for (double u : {-0.9, -0.7, -0.45, -0.2}) {
    st.push_back({l.head_center + u * half, head * std::sqrt(1.0 - u * u), kHeadAspect});
  }
  st.push_back({l.head_center - plateau * half, head, kHeadAspect});
  st.push_back({l.head_center + plateau * half, head, kHeadAspect});
  for (double u : {0.2, 0.45, 0.7, 0.88}) {
    st.push_back({l.head_center + u * half, head * std::sqrt(1.0 - u * u), kHeadAspect});
  }
  return loft(Axis::kY, st, n, {}, {CapKind::kApex, stature}, kMaxRingStep);
}

TriangleMesh build_left_arm(const BodySpec& s, const Layout& l, int n) {
  const double sx = 0.5 * s.shoulder_width;
  const double wrist_x = sx + s.arm_len;
  const double bicep = s.aux("bicep"), forearm = s.aux("forearm"), wrist = s.aux("wrist");
  const GirthLevels& g = l.levels;
  const double y = l.shoulder_y;
  // Flat hand, palm down: thin along Y, wide along Z.
  const double hand_a = 0.022 * s.arm_len;
  const double hand_aspect = 3.2;
  const double hand_girth = hand_a * unit_ellipse_polygon_perimeter(hand_aspect, n);
  const std::vector<Station> st = {
      {sx - l.arm_root_radius, 1.1 * bicep, 1.0, y},
      {sx, 1.1 * bicep, 1.0, y},
      {g.bicep_x - 1.0, bicep, 1.0, y},
      {g.bicep_x + 1.0, bicep, 1.0, y},
      {l.elbow_x, 0.95 * 0.5 * (bicep + forearm), 1.0, y},
      {g.forearm_x - 1.0, forearm, 1.0, y},
      {g.forearm_x + 1.0, forearm, 1.0, y},
      {g.wrist_x - 0.75, wrist, 1.0, y},
      {wrist_x, wrist, 1.0, y},
      {wrist_x + 0.04 * s.arm_len, hand_girth, hand_aspect, y},
      {wrist_x + 0.13 * s.arm_len, hand_girth, hand_aspect, y},
  };
  return loft(Axis::kX, st, n, {}, {CapKind::kApex, wrist_x + 0.19 * s.arm_len}, kMaxRingStep);
}

TriangleMesh build_left_leg(const BodySpec& s, const Layout& l, int n) {
  const double thigh = s.aux("thigh"), calf = s.aux("calf"), ankle = s.aux("ankle");
  const GirthLevels& g = l.levels;
  const double x = l.hx;
  const double foot_len = 0.15 * s.stature;
  const double foot_a = 0.028 * s.stature;
  const double foot_aspect = 0.5 * foot_len / foot_a;
  const double foot_girth = foot_a * unit_ellipse_polygon_perimeter(foot_aspect, n);
  const double foot_z = 0.5 * foot_len - 1.3 * ngon_radius_for_perimeter(ankle, n);
  const std::vector<Station> st = {
      {0.0, foot_girth, foot_aspect, x, foot_z},
      {0.45 * l.ankle_y, foot_girth, foot_aspect, x, foot_z},
      {l.ankle_y, ankle, 1.0, x},
      {g.ankle_y - 0.75, ankle, 1.0, x},
      {g.ankle_y + 0.75, ankle, 1.0, x},
      {g.calf_y - 1.0, calf, 1.0, x},
      {g.calf_y + 1.0, calf, 1.0, x},
      {l.knee_y, 0.92 * 0.5 * (thigh + calf), 1.0, x},
      {g.thigh_y - 1.0, thigh, 1.0, x},
      {l.crotch_y + kLegOverlap, thigh, 1.0, x},
  };
  return loft(Axis::kY, st, n, {}, {}, kMaxRingStep);
}

}  // namespace

std::optional<std::string> spec_problem(const BodySpec& spec) {
  auto plan = plan_layout(spec);
  if (auto* problem = std::get_if<std::string>(&plan)) return *problem;
  return std::nullopt;
}

void validate_spec(const BodySpec& spec) {
  if (auto problem = spec_problem(spec)) throw ValidationError("body spec: " + *problem);
}

BodySpec sample_body_spec(Sex sex, std::uint64_t seed, const GenerationRanges& ranges) {
  validate_ranges(ranges);
  const auto& table = ranges.for_sex(sex);
  constexpr int kMaxAttempts = 1000;
  Rng rng(derive_seed(seed, sex == Sex::kMale ? 1 : 2));
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    auto draw = [&](const char* name) {
      const Range& r = table.find(name)->second;
      return rng.uniform(r.min, r.max);
    };
    BodySpec s;
    s.sex = sex;
    s.seed = seed;
    s.stature = draw("stature");
    s.torso_len = draw("torso_len");
    s.leg_len = draw("leg_len");
    s.arm_len = draw("arm_len");
    s.waist_circ = draw("waist_circ");
    s.pelvis_circ = draw("pelvis_circ");
    s.shoulder_width = draw("shoulder_width");
    for (std::string_view g : kAuxGirthNames) {
      s.aux_girths[std::string(g)] = draw((std::string(g) + "_circ").c_str());
    }
    if (!spec_problem(s)) return s;
  }
  throw ConfigError("generation ranges admit no buildable " + std::string(to_string(sex)) +
                    " body");
}

BodyMesh build_body(const BodySpec& spec, int resolution) {
  if (resolution < kMinResolution) {
    throw InvalidArgument("resolution must be >= " + std::to_string(kMinResolution));
  }
  auto plan = plan_layout(spec);
  if (auto* problem = std::get_if<std::string>(&plan)) throw ValidationError("body spec: " + *problem);
  const Layout& l = std::get<Layout>(plan);

  BodyMesh body;
  body.skeleton = l.skeleton;
  TriangleMesh& m = body.mesh;
  m.append(build_torso(spec, l, resolution));
  m.append(build_neck(spec, l, resolution));
  m.append(build_head(spec, l, resolution, spec.stature));
  const TriangleMesh arm = build_left_arm(spec, l, resolution);
  m.append(arm);
  m.append(mirror_x(arm));
  const TriangleMesh leg = build_left_leg(spec, l, resolution);
  m.append(leg);
  m.append(mirror_x(leg));
  return body;
}

void write_obj(const BodyMesh& body, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# bodymeasure T-pose body, Y up, units cm\n";
  for (const auto& [name, p] : body.skeleton.joints) {
    out << "# joint " << name << ' ' << p.x << ' ' << p.y << ' ' << p.z << '\n';
  }
  for (const Vec3& v : body.mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const Face& f : body.mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bm
