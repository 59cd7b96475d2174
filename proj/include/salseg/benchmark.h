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

#ifndef SALSEG_BENCHMARK_H_
#define SALSEG_BENCHMARK_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "salseg/image.h"
#include "salseg/synthetic.h"

namespace salseg {

// Ordered class names. Raster label k >= 1 refers to names[k - 1]; label 0 is
// background.
struct ClassList {
  std::vector<std::string> names;

  int size() const { return static_cast<int>(names.size()); }
  // 1-based raster label of `name`, or nullopt.
  std::optional<int> LabelOf(const std::string& name) const;
  // Unique, nonempty names.
  void Validate() const;
};

// UTF-8 text, one name per line; blank lines are skipped.
ClassList LoadClassList(const std::string& path);
void SaveClassList(const ClassList& classes, const std::string& path);

struct BenchmarkSpec {
  std::uint64_t seed = 7;
  int images = 20;
  int classes = 4;
  int grid = 24;
  int width = 96;
  int height = 96;
  double decay = 0.3;
  double noise = 0.1;
  // Uniform per-channel pixel noise amplitude (+-), 0-255 scale.
  int pixel_noise = 4;
  // Blobs per image are drawn uniformly from [min_blobs, min(4, classes)].
  int min_blobs = 1;
  // Peak position along a random direction from the patch centroid: 0 puts
  // it at the centroid, 1 at the farthest support patch.
  double peak_offset = 0.25;
  int focus_layer = 0;
  int focus_head = 0;
  double focus_spread = 0.5;
};

struct BenchmarkItem {
  std::string name;
  // Scene classes are the classes present in the image, in ascending label
  // order; the provider's class k is scene.classes[k].
  SyntheticScene scene;
  RgbImage image;
  LabelRaster truth;
  std::vector<std::string> classes_present;
};

struct Benchmark {
  ClassList classes;
  std::vector<Rgb> palette;  // palette[k] colors label k; [0] is background
  std::vector<BenchmarkItem> items;
};

// Deterministic for a given spec. Each image holds 1 to min(4, classes)
// non-overlapping blobs, each of a distinct class.
Benchmark SynthBenchmark(const BenchmarkSpec& spec);

// Patch label by majority vote over each patch's pixel cell (cells as in
// UpsampleNearest); ties go to the lower label.
LabelRaster DownsampleMajority(const LabelRaster& raster, int grid);

struct ManifestEntry {
  std::string image;
  std::string raster;
  std::string scene;  // optional, synthetic datasets only
  std::vector<std::string> classes_present;
};

struct Manifest {
  // Paths inside entries are relative to this directory.
  std::string root;
  std::vector<ManifestEntry> entries;
};

Manifest LoadManifest(const std::string& path);

// Writes manifest.json, classes.txt, palette.json and images/, gt/,
// scenes/ under `dir`.
void WriteBenchmark(const Benchmark& benchmark, const std::string& dir);

}  // namespace salseg

#endif  // SALSEG_BENCHMARK_H_
