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

#include "bodymeasure/screening.hpp"

#include <fmt/format.h>

#include <cmath>

#include "bodymeasure/datakit.hpp"
#include "bodymeasure/errors.hpp"

namespace bm {
namespace {

void require_positive(double value, std::string_view what) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw InvalidArgument(fmt::format("{} must be positive and finite, got {}", what, value));
}

std::optional<double> optional_threshold(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) throw ConfigError(fmt::format("{} must be a number", key));
  const double v = j.at(key).get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("{} must be positive", key));
  return v;
}

nlohmann::json flag_json(const std::optional<bool>& flag) {
  if (!flag) return "not assessed";
  return *flag;
}

std::string flag_text(const std::optional<bool>& flag) {
  if (!flag) return "not assessed";
  return *flag ? "FLAGGED" : "within threshold";
}

}  // namespace

std::string_view to_string(WaistClass c) {
  switch (c) {
    case WaistClass::kNormal: return "normal";
    case WaistClass::kIncreased: return "increased";
    case WaistClass::kHigh: return "high";
  }
  return "unknown";
}

std::string_view to_string(WhrClass c) {
  return c == WhrClass::kIncreased ? "increased" : "normal";
}

WaistClass classify_waist(Sex sex, double waist_cm) {
  require_positive(waist_cm, "waist");
  const double increased = sex == Sex::kMale ? 94.0 : 80.0;
  const double high = sex == Sex::kMale ? 102.0 : 88.0;
  if (waist_cm >= high) return WaistClass::kHigh;
  if (waist_cm >= increased) return WaistClass::kIncreased;
  return WaistClass::kNormal;
}

double waist_to_hip_ratio(double waist_cm, double pelvis_cm) {
  require_positive(pelvis_cm, "pelvis");
  require_positive(waist_cm, "waist");
  return waist_cm / pelvis_cm;
}

WhrClass classify_whr(Sex sex, double whr) {
  require_positive(whr, "waist-to-hip ratio");
  const double limit = sex == Sex::kMale ? 0.90 : 0.85;
  return whr > limit ? WhrClass::kIncreased : WhrClass::kNormal;
}

ProportionThresholds parse_thresholds(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("thresholds config must be a JSON object");
  return {optional_threshold(j, "arm_torso_max"), optional_threshold(j, "leg_torso_max")};
}

ProportionThresholds load_thresholds(const std::filesystem::path& path) {
  try {
    return parse_thresholds(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ProportionRatios proportion_ratios(double arm_cm, double leg_cm, double torso_cm,
                                   const ProportionThresholds& thresholds) {
  require_positive(arm_cm, "arm length");
  require_positive(leg_cm, "leg length");
  require_positive(torso_cm, "torso length");
  ProportionRatios r;
  r.arm_torso = arm_cm / torso_cm;
  r.leg_torso = leg_cm / torso_cm;
  if (thresholds.arm_torso_max) r.arm_torso_flag = r.arm_torso > *thresholds.arm_torso_max;
  if (thresholds.leg_torso_max) r.leg_torso_flag = r.leg_torso > *thresholds.leg_torso_max;
  return r;
}

ScreeningReport screen_subject(const MeasurementSet& measurements, Sex sex,
                               const ProportionThresholds& thresholds) {
  for (std::string_view key : kCanonicalMeasurements) {
    if (!measurements.has(key))
      throw ValidationError(fmt::format("missing measurement: {}", key));
  }
  ScreeningReport r;
  r.sex = sex;
  r.waist = measurements.at("waist_circumference");
  r.pelvis = measurements.at("pelvis_circumference");
  r.arm = measurements.at("shoulder_to_wrist");
  r.leg = measurements.at("leg_length");
  r.torso = measurements.at("torso_length");
  r.waist_class = classify_waist(sex, r.waist);
  r.whr = waist_to_hip_ratio(r.waist, r.pelvis);
  r.whr_class = classify_whr(sex, r.whr);
  r.ratios = proportion_ratios(r.arm, r.leg, r.torso, thresholds);
  r.thresholds = thresholds;
  return r;
}

nlohmann::json to_json(const ScreeningReport& r) {
  auto threshold = [](const std::optional<double>& t) -> nlohmann::json {
    return t ? nlohmann::json(*t) : nlohmann::json(nullptr);
  };
  nlohmann::json out;
  out["sex"] = to_string(r.sex);
  out["inputs_cm"] = {{"waist_circumference", r.waist},
                      {"pelvis_circumference", r.pelvis},
                      {"shoulder_to_wrist", r.arm},
                      {"leg_length", r.leg},
                      {"torso_length", r.torso}};
  out["waist_class"] = to_string(r.waist_class);
  out["whr"] = r.whr;
  out["whr_class"] = to_string(r.whr_class);
  out["ratios"] = {{"arm_torso", r.ratios.arm_torso}, {"leg_torso", r.ratios.leg_torso}};
  out["marfanoid_flags"] = {{"arm_torso", flag_json(r.ratios.arm_torso_flag)},
                            {"leg_torso", flag_json(r.ratios.leg_torso_flag)}};
  out["thresholds"] = {{"arm_torso_max", threshold(r.thresholds.arm_torso_max)},
                       {"leg_torso_max", threshold(r.thresholds.leg_torso_max)}};
  return out;
}

std::string format_screening_text(const ScreeningReport& r) {
  std::string out = fmt::format("Screening report ({})\n", to_string(r.sex));
  out += fmt::format("  waist circumference   {:8.2f} cm   {}\n", r.waist, to_string(r.waist_class));
  out += fmt::format("  pelvis circumference  {:8.2f} cm\n", r.pelvis);
  out += fmt::format("  waist-to-hip ratio    {:8.3f}      {}\n", r.whr, to_string(r.whr_class));
  out += fmt::format("  arm / torso           {:8.3f}      {}\n", r.ratios.arm_torso,
                     flag_text(r.ratios.arm_torso_flag));
  out += fmt::format("  leg / torso           {:8.3f}      {}\n", r.ratios.leg_torso,
                     flag_text(r.ratios.leg_torso_flag));
  return out;
}

}  // namespace bm
