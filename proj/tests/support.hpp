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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>

#include "bodymeasure/bodygen.hpp"

namespace bm::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bodymeasure_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative path -> bytes for every regular file under `root`.
inline std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file())
      out[std::filesystem::relative(entry.path(), root).string()] = slurp(entry.path());
  }
  return out;
}

// A mid-range adult of either sex.
inline BodySpec typical_spec(Sex sex = Sex::kMale) {
  BodySpec s;
  s.sex = sex;
  const bool m = sex == Sex::kMale;
  s.stature = m ? 178.0 : 165.0;
  s.torso_len = m ? 55.0 : 51.0;
  s.leg_len = m ? 86.0 : 80.0;
  s.arm_len = m ? 58.0 : 53.0;
  s.waist_circ = m ? 88.0 : 76.0;
  s.pelvis_circ = m ? 100.0 : 102.0;
  s.shoulder_width = m ? 42.0 : 37.0;
  s.aux_girths = {{"head", m ? 57.0 : 55.0}, {"neck", m ? 39.0 : 33.0},  {"chest", m ? 100.0 : 92.0},
                  {"thigh", m ? 56.0 : 58.0}, {"calf", m ? 38.0 : 36.0},  {"bicep", m ? 31.0 : 27.0},
                  {"forearm", m ? 28.0 : 24.0}, {"wrist", m ? 17.5 : 15.5}, {"ankle", m ? 23.0 : 21.5}};
  s.seed = 1;
  return s;
}

}  // namespace bm::testing
