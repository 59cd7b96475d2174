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

#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"

namespace salseg {
namespace {

std::vector<std::uint8_t> Bytes(const std::string& s) {
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

TEST(NetpbmTest, RandomRasterRoundTripsExactly) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> size(1, 40);
  std::uniform_int_distribution<int> label(0, 255);
  for (int trial = 0; trial < 50; ++trial) {
    LabelRaster raster(size(rng), size(rng));
    for (std::size_t i = 0; i < raster.size(); ++i) raster[i] = label(rng);
    const std::vector<std::uint8_t> bytes = FormatPgm(raster);
    EXPECT_EQ(ParsePgm(bytes), raster);
    EXPECT_EQ(FormatPgm(ParsePgm(bytes)), bytes);
  }
}

TEST(NetpbmTest, RandomRgbImageRoundTripsExactly) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const RgbImage image = testing::RandomImage(rng, 3 + trial, 5 + trial % 7);
    EXPECT_EQ(ParsePpm(FormatPpm(image)), image);
  }
}

TEST(NetpbmTest, ParsesMinimalP5Header) {
  const LabelRaster raster = ParsePgm(Bytes(std::string("P5\n3 2\n255\n") +
                                            std::string("\x00\x01\x02\x03\x04\x05", 6)));
  ASSERT_EQ(raster.width(), 3);
  ASSERT_EQ(raster.height(), 2);
  EXPECT_EQ(raster.at(0, 0), 0);
  EXPECT_EQ(raster.at(2, 1), 5);
}

TEST(NetpbmTest, AcceptsCommentsInHeader) {
  const LabelRaster raster =
      ParsePgm(Bytes("P5\n# made by hand\n2 1 # size\n255\nab"));
  EXPECT_EQ(raster.at(1, 0), 'b');
}

TEST(NetpbmTest, RejectsAsciiAndMalformedFiles) {
  EXPECT_THROW(ParsePgm(Bytes("P2\n3 2\n255\n0 1 2 3 4 5\n")), NetpbmFormatError);
  EXPECT_THROW(ParsePgm(Bytes("P6\n1 1\n255\nabc")), NetpbmFormatError);
  EXPECT_THROW(ParsePpm(Bytes("P5\n1 1\n255\na")), NetpbmFormatError);
  EXPECT_THROW(ParsePgm(Bytes("P5\n3 2\n255\nabc")), NetpbmFormatError);
  EXPECT_THROW(ParsePgm(Bytes("P5\n3 2\n65535\n")), NetpbmFormatError);
  EXPECT_THROW(ParsePgm(Bytes("P5\n0 2\n255\n")), NetpbmFormatError);
  EXPECT_THROW(ParsePgm(Bytes("P5\n3\n")), NetpbmFormatError);
  EXPECT_THROW(ParsePgm(Bytes("")), NetpbmFormatError);
  EXPECT_THROW(ParsePgm(Bytes("JUNK")), NetpbmFormatError);
}

TEST(NetpbmTest, RandomTruncationIsRejected) {
  LabelRaster raster(7, 5, 3);
  const std::vector<std::uint8_t> bytes = FormatPgm(raster);
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    const std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + cut);
    EXPECT_THROW(ParsePgm(head), NetpbmFormatError) << "cut at " << cut;
  }
}

TEST(NetpbmTest, FileRoundTripAndClassBound) {
  testing::TempDir dir;
  LabelRaster raster(4, 4);
  raster.at(1, 2) = 3;
  SaveLabelRaster(raster, dir / "m.pgm");
  EXPECT_EQ(LoadLabelRaster(dir / "m.pgm"), raster);
  EXPECT_EQ(LoadLabelRaster(dir / "m.pgm", 3), raster);
  EXPECT_THROW(LoadLabelRaster(dir / "m.pgm", 2), LabelRangeError);
  EXPECT_THROW(LoadLabelRaster(dir / "missing.pgm"), IoError);
}

}  // namespace
}  // namespace salseg
