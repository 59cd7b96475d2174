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

#include "salseg/netpbm.h"

#include <cctype>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

namespace salseg {
namespace {

struct Header {
  int width = 0;
  int height = 0;
  std::size_t data_offset = 0;
};

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void SkipSpaceAndComments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  int Number(const char* what) {
    SkipSpaceAndComments();
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1 << 24)) throw NetpbmFormatError(fmt::format("{} too large", what));
      ++pos_;
    }
    if (pos_ == start) {
      throw NetpbmFormatError(fmt::format("missing {} at byte {}", what, start));
    }
    return static_cast<int>(v);
  }

  std::size_t pos() const { return pos_; }
  void Advance() { ++pos_; }
  bool AtSpace() const { return pos_ < bytes_.size() && std::isspace(bytes_[pos_]); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

Header ParseHeader(std::span<const std::uint8_t> bytes, char kind,
                   std::size_t channels) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw NetpbmFormatError("not a netpbm file");
  }
  if (bytes[1] != kind) {
    throw NetpbmFormatError(fmt::format(
        "unsupported netpbm variant P{}, only binary P{} is accepted",
        static_cast<char>(bytes[1]), kind));
  }
  HeaderReader reader(bytes);
  Header h;
  h.width = reader.Number("width");
  h.height = reader.Number("height");
  const int maxval = reader.Number("maxval");
  if (h.width < 1 || h.height < 1) {
    throw NetpbmFormatError("netpbm image has zero size");
  }
  if (maxval != 255) {
    throw NetpbmFormatError(fmt::format("maxval must be 255, got {}", maxval));
  }
  if (!reader.AtSpace()) {
    throw NetpbmFormatError("expected one whitespace byte after maxval");
  }
  reader.Advance();
  h.data_offset = reader.pos();
  const std::size_t need =
      static_cast<std::size_t>(h.width) * h.height * channels;
  if (bytes.size() - h.data_offset < need) {
    throw NetpbmFormatError(fmt::format("truncated pixel data: need {} bytes, "
                                        "have {}",
                                        need, bytes.size() - h.data_offset));
  }
  return h;
}

std::vector<std::uint8_t> FormatHeader(char kind, int width, int height) {
  const std::string header = fmt::format("P{}\n{} {}\n255\n", kind, width, height);
  return std::vector<std::uint8_t>(header.begin(), header.end());
}

}  // namespace

LabelRaster ParsePgm(std::span<const std::uint8_t> bytes) {
  const Header h = ParseHeader(bytes, '5', 1);
  LabelRaster raster(h.width, h.height);
  std::copy_n(bytes.begin() + h.data_offset, raster.size(),
              raster.mutable_data().begin());
  return raster;
}

std::vector<std::uint8_t> FormatPgm(const LabelRaster& raster) {
  std::vector<std::uint8_t> out = FormatHeader('5', raster.width(), raster.height());
  out.insert(out.end(), raster.data().begin(), raster.data().end());
  return out;
}

RgbImage ParsePpm(std::span<const std::uint8_t> bytes) {
  const Header h = ParseHeader(bytes, '6', 3);
  RgbImage image(h.width, h.height);
  std::copy_n(bytes.begin() + h.data_offset, image.bytes().size(),
              image.mutable_bytes().begin());
  return image;
}

std::vector<std::uint8_t> FormatPpm(const RgbImage& image) {
  std::vector<std::uint8_t> out = FormatHeader('6', image.width(), image.height());
  out.insert(out.end(), image.bytes().begin(), image.bytes().end());
  return out;
}

std::vector<std::uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string& path,
                    std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

LabelRaster LoadLabelRaster(const std::string& path,
                            std::optional<int> classes) {
  LabelRaster raster;
  try {
    raster = ParsePgm(ReadFileBytes(path));
  } catch (const NetpbmFormatError& e) {
    throw NetpbmFormatError(path + ": " + e.what());
  }
  if (classes) {
    for (std::size_t i = 0; i < raster.size(); ++i) {
      if (raster[i] > *classes) {
        throw LabelRangeError(fmt::format("{}: class index {} exceeds {}", path,
                                          raster[i], *classes));
      }
    }
  }
  return raster;
}

void SaveLabelRaster(const LabelRaster& raster, const std::string& path) {
  WriteFileBytes(path, FormatPgm(raster));
}

RgbImage LoadPpm(const std::string& path) {
  try {
    return ParsePpm(ReadFileBytes(path));
  } catch (const NetpbmFormatError& e) {
    throw NetpbmFormatError(path + ": " + e.what());
  }
}

void SavePpm(const RgbImage& image, const std::string& path) {
  WriteFileBytes(path, FormatPpm(image));
}

}  // namespace salseg
