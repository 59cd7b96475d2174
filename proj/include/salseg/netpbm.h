/* Copyright 2026 The Salseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SALSEG_NETPBM_H_
#define SALSEG_NETPBM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "salseg/error.h"
#include "salseg/image.h"

namespace salseg {

// Header or payload does not follow the binary netpbm grammar we accept.
class NetpbmFormatError : public IoError {
 public:
  using IoError::IoError;
};

// A raster holds a class index larger than the class list allows.
class LabelRangeError : public Error {
 public:
  using Error::Error;
};

// Binary PGM (P5, maxval 255). Pixel value = class index.
LabelRaster ParsePgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> FormatPgm(const LabelRaster& raster);

// Binary PPM (P6, maxval 255).
RgbImage ParsePpm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> FormatPpm(const RgbImage& image);

// With `classes` set, every label must be <= classes (LabelRangeError).
LabelRaster LoadLabelRaster(const std::string& path,
                            std::optional<int> classes = std::nullopt);
void SaveLabelRaster(const LabelRaster& raster, const std::string& path);

RgbImage LoadPpm(const std::string& path);
void SavePpm(const RgbImage& image, const std::string& path);

std::vector<std::uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace salseg

#endif  // SALSEG_NETPBM_H_
