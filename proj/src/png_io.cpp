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

#include <png.h>

#include <cstring>
#include <system_error>

#include "bodymeasure/errors.hpp"
#include "bodymeasure/imaging.hpp"

namespace bm {

void write_png(const GrayImage& image, const std::filesystem::path& path) {
  if (image.empty()) throw InvalidArgument("write_png: empty image");
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), image.width, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw IoError("cannot write " + path.string() + ": " + message);
  }
}

GrayImage read_png(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw IoError("no such image: " + path.string());
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    const std::string message = png.message;
    png_image_free(&png);
    throw DecodeError("cannot decode " + path.string() + ": " + message);
  }
  png.format = PNG_FORMAT_GRAY;
  GrayImage image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (image.empty() ||
      !png_image_finish_read(&png, nullptr, image.pixels.data(), image.width, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw DecodeError("cannot decode " + path.string() + ": " + message);
  }
  return image;
}

}  // namespace bm
