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

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>

#include "bodymeasure/bodygen.hpp"
#include "bodymeasure/measure.hpp"

namespace bm {

enum class WaistClass { kNormal, kIncreased, kHigh };
enum class WhrClass { kNormal, kIncreased };

std::string_view to_string(WaistClass c);
std::string_view to_string(WhrClass c);

// Waist cutoffs, inclusive: men 94 / 102 cm, women 80 / 88 cm.
WaistClass classify_waist(Sex sex, double waist_cm);
double waist_to_hip_ratio(double waist_cm, double pelvis_cm);
// Strictly above 0.90 for men and 0.85 for women.
WhrClass classify_whr(Sex sex, double whr);

// Marfanoid proportion cutoffs. None ship by default.
struct ProportionThresholds {
  std::optional<double> arm_torso_max;
  std::optional<double> leg_torso_max;
};

ProportionThresholds parse_thresholds(const nlohmann::json& j);
ProportionThresholds load_thresholds(const std::filesystem::path& path);

struct ProportionRatios {
  double arm_torso = 0.0;
  double leg_torso = 0.0;
  // Empty when no threshold is configured ("not assessed").
  std::optional<bool> arm_torso_flag;
  std::optional<bool> leg_torso_flag;
};

ProportionRatios proportion_ratios(double arm_cm, double leg_cm, double torso_cm,
                                   const ProportionThresholds& thresholds);

struct ScreeningReport {
  Sex sex = Sex::kMale;
  double waist = 0.0;
  double pelvis = 0.0;
  double arm = 0.0;
  double leg = 0.0;
  double torso = 0.0;
  WaistClass waist_class = WaistClass::kNormal;
  double whr = 0.0;
  WhrClass whr_class = WhrClass::kNormal;
  ProportionRatios ratios;
  ProportionThresholds thresholds;
};

// Needs the five canonical measurements; a missing key raises
// ValidationError naming it.
ScreeningReport screen_subject(const MeasurementSet& measurements, Sex sex,
                               const ProportionThresholds& thresholds = {});

nlohmann::json to_json(const ScreeningReport& report);
std::string format_screening_text(const ScreeningReport& report);

}  // namespace bm
