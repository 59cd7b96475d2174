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

#include "salseg/metrics.h"

#include <gtest/gtest.h>

#include "salseg/error.h"

namespace salseg {
namespace {

LabelRaster Raster(int w, int h, std::vector<std::uint8_t> v) {
  LabelRaster r(w, h);
  std::copy(v.begin(), v.end(), r.mutable_data().begin());
  return r;
}

TEST(MetricsTest, IdenticalRastersScoreOne) {
  const LabelRaster r = Raster(3, 2, {0, 1, 2, 2, 1, 0});
  ConfusionAccumulator acc(2);
  acc.Add(r, r);
  EXPECT_EQ(MeanIou(acc), 1.0);
}

TEST(MetricsTest, HalfOverlapGivesOneThird) {
  ConfusionAccumulator acc(1);
  acc.Add(Raster(4, 1, {1, 1, 0, 0}), Raster(4, 1, {0, 1, 1, 0}));
  const auto iou = IouPerClass(acc);
  ASSERT_TRUE(iou[1].has_value());
  EXPECT_DOUBLE_EQ(*iou[1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(MeanIou(acc), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*iou[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(MeanIou(acc, true), 1.0 / 3.0);
}

TEST(MetricsTest, AbsentClassesAreExcluded) {
  ConfusionAccumulator acc(3);
  acc.Add(Raster(2, 1, {1, 0}), Raster(2, 1, {1, 0}));
  const auto iou = IouPerClass(acc);
  EXPECT_FALSE(iou[2].has_value());
  EXPECT_FALSE(iou[3].has_value());
  EXPECT_EQ(MeanIou(acc), 1.0);
}

TEST(MetricsTest, IgnoreLabelIsSkipped) {
  ConfusionAccumulator acc(1);
  acc.Add(Raster(3, 1, {1, 255, 0}), Raster(3, 1, {1, 0, 0}));
  EXPECT_EQ(acc.total(), 2u);
  EXPECT_EQ(MeanIou(acc), 1.0);
}

TEST(MetricsTest, MergeEqualsJointAccumulation) {
  const LabelRaster a = Raster(2, 2, {0, 1, 2, 1});
  const LabelRaster b = Raster(2, 2, {1, 1, 2, 0});
  ConfusionAccumulator joint(2), left(2), right(2);
  joint.Add(a, b);
  joint.Add(b, a);
  left.Add(a, b);
  right.Add(b, a);
  left.Merge(right);
  EXPECT_EQ(left, joint);
}

TEST(MetricsTest, ErrorsOnEmptyAndMismatch) {
  ConfusionAccumulator acc(2);
  EXPECT_THROW(MeanIou(acc), ContractError);
  EXPECT_THROW(acc.Add(LabelRaster(2, 2), LabelRaster(2, 3)), ContractError);
  EXPECT_THROW(acc.Add(Raster(1, 1, {3}), Raster(1, 1, {0})), ContractError);
}

}  // namespace
}  // namespace salseg
