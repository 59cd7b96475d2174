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

#include "salseg/benchmark.h"

#include <filesystem>

#include <gtest/gtest.h>

#include "salseg/netpbm.h"
#include "test_util.h"

namespace salseg {
namespace {

BenchmarkSpec SmallSpec() {
  BenchmarkSpec spec;
  spec.images = 6;
  spec.width = 48;
  spec.height = 48;
  spec.grid = 12;
  return spec;
}

TEST(BenchmarkTest, SameSeedGivesByteIdenticalFiles) {
  testing::TempDir a, b;
  WriteBenchmark(SynthBenchmark(SmallSpec()), a.path().string());
  WriteBenchmark(SynthBenchmark(SmallSpec()), b.path().string());
  int files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    EXPECT_EQ(ReadFileBytes(entry.path().string()),
              ReadFileBytes((b.path() / rel).string()))
        << rel;
    ++files;
  }
  EXPECT_GT(files, 3 * 6);
}

TEST(BenchmarkTest, DifferentSeedsDiffer) {
  BenchmarkSpec other = SmallSpec();
  other.seed = 8;
  EXPECT_NE(SynthBenchmark(SmallSpec()).items[0].truth,
            SynthBenchmark(other).items[0].truth);
}

TEST(BenchmarkTest, SingleClassSpecLabelsEverySceneWithIt) {
  BenchmarkSpec spec = SmallSpec();
  spec.classes = 1;
  const Benchmark bench = SynthBenchmark(spec);
  ASSERT_EQ(bench.classes.size(), 1);
  for (const auto& item : bench.items) {
    EXPECT_EQ(item.classes_present, bench.classes.names);
    EXPECT_EQ(item.scene.classes, bench.classes.names);
  }
}

TEST(BenchmarkTest, DownsampledRasterMatchesPlantedMasks) {
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    BenchmarkSpec spec;
    spec.seed = seed;
    spec.images = 5;
    const Benchmark bench = SynthBenchmark(spec);
    for (const auto& item : bench.items) {
      const LabelRaster patches = DownsampleMajority(item.truth, spec.grid);
      ASSERT_EQ(item.scene.class_count(),
                static_cast<int>(item.classes_present.size()));
      for (int k = 0; k < item.scene.class_count(); ++k) {
        const int label = *bench.classes.LabelOf(item.scene.classes[k]);
        for (int p = 0; p < spec.grid * spec.grid; ++p) {
          ASSERT_EQ(item.scene.masks[k][p], patches[p] == label)
              << item.name << " class " << k << " patch " << p;
        }
      }
    }
  }
}

TEST(BenchmarkTest, DownsampleMajorityBreaksTiesLow) {
  LabelRaster r(2, 2);
  r.at(0, 0) = 2;
  r.at(1, 0) = 2;
  r.at(0, 1) = 1;
  r.at(1, 1) = 1;
  EXPECT_EQ(DownsampleMajority(r, 1)[0], 1);
}

TEST(BenchmarkTest, ManifestRoundTrip) {
  testing::TempDir dir;
  const Benchmark bench = SynthBenchmark(SmallSpec());
  WriteBenchmark(bench, dir.path().string());
  const Manifest m = LoadManifest(dir / "manifest.json");
  ASSERT_EQ(m.entries.size(), bench.items.size());
  const auto& e = m.entries[0];
  EXPECT_EQ(e.classes_present, bench.items[0].classes_present);
  EXPECT_EQ(LoadLabelRaster((std::filesystem::path(m.root) / e.raster).string()),
            bench.items[0].truth);
  EXPECT_EQ(LoadPpm((std::filesystem::path(m.root) / e.image).string()),
            bench.items[0].image);
  EXPECT_EQ(LoadClassList(dir / "classes.txt").names, bench.classes.names);
}

}  // namespace
}  // namespace salseg
