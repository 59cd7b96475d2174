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

#ifndef SALSEG_IMAGE_H_
#define SALSEG_IMAGE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "salseg/error.h"

namespace salseg {

// Single-channel W x H map, row-major (index = y * width + x).
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ContractError("plane needs positive size, got " +
                          std::to_string(width) + "x" + std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  T at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  T operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  std::span<const T> data() const { return data_; }
  std::span<T> mutable_data() { return data_; }

  bool SameSize(int width, int height) const {
    return width_ == width && height_ == height;
  }
  template <typename U>
  bool SameSize(const Plane<U>& other) const {
    return SameSize(other.width(), other.height());
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using RealPlane = Plane<double>;
using BinaryPlane = Plane<std::uint8_t>;

// Per-pixel class index; 0 is background, k >= 1 is class k - 1 of the
// class list.
using LabelRaster = Plane<std::uint8_t>;

// Throws ContractError if any label exceeds `classes`.
void ValidateLabels(const LabelRaster& raster, int classes);

using Rgb = std::array<std::uint8_t, 3>;

// Interleaved 8-bit RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {0, 0, 0});

  int width() const { return width_; }
  int height() const { return height_; }
  int pixels() const { return width_ * height_; }

  Rgb at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    data_[i] = c[0];
    data_[i + 1] = c[1];
    data_[i + 2] = c[2];
  }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> mutable_bytes() { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Zeroes every pixel whose mask entry is 0.
RgbImage ApplyMask(const RgbImage& image, const BinaryPlane& mask);

RgbImage ResizeBilinear(const RgbImage& image, int width, int height);
BinaryPlane ResizeNearest(const BinaryPlane& mask, int width, int height);

}  // namespace salseg

#endif  // SALSEG_IMAGE_H_
