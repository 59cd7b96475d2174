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

#include "salseg/image.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace salseg {

void ValidateLabels(const LabelRaster& raster, int classes) {
  for (std::size_t i = 0; i < raster.size(); ++i) {
    if (raster[i] > classes) {
      throw ContractError(fmt::format(
          "label {} at pixel ({}, {}) exceeds class count {}", raster[i],
          i % raster.width(), i / raster.width(), classes));
    }
  }
}

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw ContractError(
        fmt::format("image needs positive size, got {}x{}", width, height));
  }
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

RgbImage ApplyMask(const RgbImage& image, const BinaryPlane& mask) {
  if (!mask.SameSize(image.width(), image.height())) {
    throw ContractError(fmt::format("mask {}x{} does not match image {}x{}",
                                    mask.width(), mask.height(), image.width(),
                                    image.height()));
  }
  RgbImage out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!mask.at(x, y)) out.set(x, y, {0, 0, 0});
    }
  }
  return out;
}

RgbImage ResizeBilinear(const RgbImage& image, int width, int height) {
  if (image.width() == width && image.height() == height) return image;
  RgbImage out(width, height);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    // Pixel-center alignment.
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(image.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(image.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - x0;
      Rgb c;
      for (int ch = 0; ch < 3; ++ch) {
        const double top =
            image.at(x0, y0)[ch] * (1 - wx) + image.at(x1, y0)[ch] * wx;
        const double bottom =
            image.at(x0, y1)[ch] * (1 - wx) + image.at(x1, y1)[ch] * wx;
        c[ch] = static_cast<std::uint8_t>(
            std::lround(std::clamp(top * (1 - wy) + bottom * wy, 0.0, 255.0)));
      }
      out.set(x, y, c);
    }
  }
  return out;
}

BinaryPlane ResizeNearest(const BinaryPlane& mask, int width, int height) {
  if (mask.SameSize(width, height)) return mask;
  BinaryPlane out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(
        static_cast<int>((y + 0.5) * mask.height() / height), mask.height() - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(static_cast<int>((x + 0.5) * mask.width() / width),
                              mask.width() - 1);
      out.at(x, y) = mask.at(sx, sy);
    }
  }
  return out;
}

}  // namespace salseg
