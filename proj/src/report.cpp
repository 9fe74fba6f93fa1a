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

#include <fmt/format.h>

#include <string>

#include "bodymeasure/regressor.hpp"

namespace bm {

std::string format_eval_csv(const EvalReport& report) {
  std::string out = "measurement,male_mae_cm,female_mae_cm,total_mae_cm\n";
  auto line = [&](const MaeRow& row) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f}\n", row.measurement, row.male, row.female,
                       row.total);
  };
  for (const MaeRow& row : report.rows) line(row);
  line(report.mean);
  return out;
}

// Two blocks: per-measurement MAE, then the mean over the measurements.
std::string format_eval_table(const EvalReport& report) {
  std::string out = fmt::format("Mean Absolute Error (MAE, cm), model {} (test: {} male, {} female)\n",
                                report.model_name, report.n_male, report.n_female);
  const std::string rule(60, '-');
  out += rule + "\n";
  out += fmt::format("{:<24}{:>12}{:>12}{:>12}\n", "Measurement", "Male MAE", "Female MAE",
                     "Total MAE");
  out += rule + "\n";
  for (const MaeRow& row : report.rows)
    out += fmt::format("{:<24}{:>12.3f}{:>12.3f}{:>12.3f}\n", row.label, row.male, row.female,
                       row.total);
  out += rule + "\n";
  out += fmt::format("{:<24}{:>12.3f}{:>12.3f}{:>12.3f}\n", report.mean.label, report.mean.male,
                     report.mean.female, report.mean.total);
  out += rule + "\n";
  return out;
}

}  // namespace bm
