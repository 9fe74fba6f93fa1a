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

#include <stdexcept>
#include <string>

namespace bm {

// Every error carries a stable machine-readable class name. The CLI maps the
// category onto its exit code.
enum class ErrorCategory {
  kConfiguration = 2,
  kData = 3,
  kDivergence = 4,
  kIo = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string error_class, const std::string& message)
      : std::runtime_error(message), category_(category), class_(std::move(error_class)) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& error_class() const noexcept { return class_; }

 private:
  ErrorCategory category_;
  std::string class_;
};

#define BM_DEFINE_ERROR(Name, category, tag)                                \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message)                               \
        : Error(ErrorCategory::category, tag, message) {}                   \
  }

BM_DEFINE_ERROR(ConfigError, kConfiguration, "config_error");
BM_DEFINE_ERROR(InvalidArgument, kData, "invalid_argument");
BM_DEFINE_ERROR(ValidationError, kData, "validation_error");
BM_DEFINE_ERROR(LookupError, kData, "lookup_error");
BM_DEFINE_ERROR(EmptySectionError, kData, "empty_section");
BM_DEFINE_ERROR(EmptyRegionError, kData, "empty_region");
BM_DEFINE_ERROR(OutOfFrameError, kData, "out_of_frame");
BM_DEFINE_ERROR(DecodeError, kData, "decode_error");
BM_DEFINE_ERROR(StateError, kData, "state_error");
BM_DEFINE_ERROR(IoError, kIo, "io_error");

#undef BM_DEFINE_ERROR

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& message)
      : Error(ErrorCategory::kDivergence, "divergence", message), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace bm
