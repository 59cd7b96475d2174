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

#include "salseg/synthetic.h"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "salseg/error.h"
#include "test_util.h"

namespace salseg {
namespace {

SyntheticScene DiscScene(double decay, double noise) {
  SyntheticScene s;
  s.grid = 8;
  s.classes = {"cat", "dog"};
  s.decay = decay;
  s.noise = noise;
  s.seed = 99;
  std::vector<std::uint8_t> a(64), b(64);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      a[r * 8 + c] = std::hypot(r - 2, c - 2) <= 2.0;
      b[r * 8 + c] = r >= 5 && c >= 4;
    }
  }
  s.masks = {a, b};
  s.peaks = {{{2, 2}}, {{6, 5}}};
  return s;
}

TEST(SyntheticProviderTest, NoiselessFlatProfileEqualsPlantedMask) {
  const SyntheticScene scene = DiscScene(0.0, 0.0);
  SyntheticProvider provider(scene);
  const SalienceResponse r = provider.Query(ActivePatchSet::Full(8));
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 64; ++i) {
      EXPECT_EQ(r.attention.class_map(k)[i], float(scene.masks[k][i]));
      EXPECT_EQ(r.gradient.class_map(k)[i], scene.masks[k][i] ? 1.0f : -0.1f);
    }
  }
}

TEST(SyntheticProviderTest, DroppedPatchesReadZero) {
  SyntheticProvider provider(DiscScene(0.3, 0.1));
  const ActivePatchSet full = ActivePatchSet::Full(8);
  const SalienceResponse first = provider.Query(full);
  const std::vector<int> drop = {0, 9, 18, 27, 42};
  const ActivePatchSet reduced = full.Without(drop);
  const SalienceResponse second = provider.Query(reduced);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 64; ++i) {
      if (!reduced.active(i)) {
        EXPECT_EQ(second.attention.class_map(k)[i], 0.0f);
        EXPECT_EQ(second.gradient.class_map(k)[i], 0.0f);
      } else {
        EXPECT_EQ(second.gradient.class_map(k)[i], first.gradient.class_map(k)[i]);
      }
    }
  }
}

TEST(SyntheticProviderTest, PeakPatchIsStrictMaximum) {
  const SyntheticScene scene = DiscScene(0.5, 0.0);
  SyntheticProvider provider(scene);
  const SalienceResponse r = provider.Query(ActivePatchSet::Full(8));
  for (int k = 0; k < 2; ++k) {
    const auto map = r.attention.class_map(k);
    const int peak = scene.peaks[k][0] * 8 + scene.peaks[k][1];
    for (int i = 0; i < 64; ++i) {
      if (i != peak) EXPECT_LT(map[i], map[peak]) << "class " << k << " patch " << i;
    }
    EXPECT_EQ(map[peak], 1.0f);
    // Profile oracle: exp(-decay * distance) relative to the peak.
    EXPECT_NEAR(map[2 * 8 + 4], std::exp(-0.5 * 2.0) * (k == 0), 1e-6);
  }
}

TEST(SyntheticProviderTest, IsPureFunctionOfSceneAndRequest) {
  SyntheticProvider a(DiscScene(0.3, 0.2), 3, 4);
  SyntheticProvider b(DiscScene(0.3, 0.2), 3, 4);
  const ActivePatchSet active = ActivePatchSet::Full(8).Without(std::vector<int>{5});
  const SalienceResponse x = a.Query(active);
  const SalienceResponse y = b.Query(active);
  EXPECT_EQ(x.attention, y.attention);
  EXPECT_EQ(x.gradient, y.gradient);
  EXPECT_EQ(a.Query(active).attention, x.attention);
}

TEST(SyntheticProviderTest, FocusLayerControlsQuality) {
  SyntheticScene scene = DiscScene(0.3, 0.0);
  scene.focus_layer = 8;
  scene.focus_head = 10;
  EXPECT_EQ(SyntheticProvider(scene, 8, 10).quality(), 1.0);
  const double near = SyntheticProvider(scene, 8, 9).quality();
  const double far = SyntheticProvider(scene, 5, 2).quality();
  EXPECT_LT(near, 1.0);
  EXPECT_LT(far, near);
  EXPECT_NEAR(near, std::exp(-1.0 / (2 * 0.25)), 1e-12);
}

TEST(SyntheticProviderTest, SceneJsonRoundTrip) {
  testing::TempDir dir;
  SyntheticScene scene = DiscScene(0.3, 0.1);
  scene.focus_layer = 2;
  scene.focus_head = 3;
  SaveScene(scene, dir / "s.json");
  const SyntheticScene back = LoadScene(dir / "s.json");
  EXPECT_EQ(back.classes, scene.classes);
  EXPECT_EQ(back.masks, scene.masks);
  EXPECT_EQ(back.peaks, scene.peaks);
  EXPECT_EQ(back.seed, scene.seed);
  EXPECT_EQ(back.focus_head, 3);
}

TEST(SyntheticProviderTest, RejectsInvalidScenes) {
  SyntheticScene empty_mask = DiscScene(0.3, 0.1);
  empty_mask.masks[1].assign(64, 0);
  EXPECT_THROW(SyntheticProvider{empty_mask}, ContractError);
  SyntheticScene bad_peak = DiscScene(0.3, 0.1);
  bad_peak.peaks[0] = {8, 0};
  EXPECT_THROW(SyntheticProvider{bad_peak}, ContractError);
  SyntheticProvider ok(DiscScene(0.3, 0.1));
  EXPECT_THROW(ok.Query(ActivePatchSet::Full(7)), ContractError);
}

}  // namespace
}  // namespace salseg
