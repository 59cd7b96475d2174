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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "salseg/error.h"
#include "salseg/netpbm.h"

namespace salseg {

std::optional<int> ClassList::LabelOf(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<int>(it - names.begin()) + 1;
}

void ClassList::Validate() const {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw ContractError("class list has an empty name");
    if (!seen.insert(n).second) {
      throw ContractError("class list repeats '" + n + "'");
    }
  }
}

ClassList LoadClassList(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open class list " + path);
  ClassList list;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    list.names.push_back(line);
  }
  list.Validate();
  return list;
}

void SaveClassList(const ClassList& classes, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write class list " + path);
  for (const auto& n : classes.names) out << n << '\n';
}

LabelRaster DownsampleMajority(const LabelRaster& raster, int grid) {
  const int w = raster.width();
  const int h = raster.height();
  if (grid < 1 || w < grid || h < grid) {
    throw ContractError("raster is smaller than the patch grid");
  }
  LabelRaster out(grid, grid);
  std::vector<int> votes(256);
  for (int r = 0; r < grid; ++r) {
    const int y0 = static_cast<int>(static_cast<long long>(r) * h / grid);
    const int y1 = static_cast<int>(static_cast<long long>(r + 1) * h / grid);
    for (int c = 0; c < grid; ++c) {
      const int x0 = static_cast<int>(static_cast<long long>(c) * w / grid);
      const int x1 = static_cast<int>(static_cast<long long>(c + 1) * w / grid);
      std::fill(votes.begin(), votes.end(), 0);
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) ++votes[raster.at(x, y)];
      }
      out.at(c, r) = static_cast<std::uint8_t>(
          std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
  }
  return out;
}

namespace {

constexpr const char* kVocabulary[] = {
    "person", "dog",    "cat",   "car",   "bus",   "bird",
    "horse",  "sheep",  "cow",   "boat",  "chair", "bottle",
    "train",  "bicycle", "plant", "sofa", "table", "monitor"};

constexpr Rgb kBackground = {96, 96, 96};
constexpr Rgb kPalette[] = {{200, 60, 60},  {60, 180, 70},  {70, 90, 210},
                            {220, 200, 60}, {180, 70, 200}, {60, 200, 200},
                            {230, 140, 50}, {140, 100, 60}, {250, 160, 190},
                            {100, 150, 40}, {40, 60, 130},  {210, 210, 210}};

Rgb PaletteColor(int k) {
  constexpr int kFixed = sizeof(kPalette) / sizeof(kPalette[0]);
  if (k < kFixed) return kPalette[k];
  // Golden-angle hues for long class lists.
  const double hue = std::fmod(k * 137.508, 360.0) / 60.0;
  const double x = 1.0 - std::abs(std::fmod(hue, 2.0) - 1.0);
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hue)) {
    case 0: r = 1; g = x; break;
    case 1: r = x; g = 1; break;
    case 2: g = 1; b = x; break;
    case 3: g = x; b = 1; break;
    case 4: r = x; b = 1; break;
    default: r = 1; b = x; break;
  }
  auto scale = [](double v) {
    return static_cast<std::uint8_t>(50 + std::lround(180 * v));
  };
  return {scale(r), scale(g), scale(b)};
}

struct Rect {
  double x0, y0, x1, y1;
};

// Cells that hold one blob each.
std::vector<Rect> Layout(int blobs, int w, int h, std::mt19937_64& rng) {
  const Rect full{0, 0, double(w), double(h)};
  std::bernoulli_distribution coin(0.5);
  auto split = [](const Rect& r, bool vertical) {
    if (vertical) {
      const double mid = (r.x0 + r.x1) / 2;
      return std::pair<Rect, Rect>{{r.x0, r.y0, mid, r.y1}, {mid, r.y0, r.x1, r.y1}};
    }
    const double mid = (r.y0 + r.y1) / 2;
    return std::pair<Rect, Rect>{{r.x0, r.y0, r.x1, mid}, {r.x0, mid, r.x1, r.y1}};
  };
  switch (blobs) {
    case 1:
      return {full};
    case 2: {
      auto [a, b] = split(full, coin(rng));
      return {a, b};
    }
    case 3: {
      const bool vertical = coin(rng);
      auto [a, b] = split(full, vertical);
      if (coin(rng)) std::swap(a, b);
      auto [c, d] = split(b, !vertical);
      return {a, c, d};
    }
    default: {
      auto [a, b] = split(full, true);
      auto [c, d] = split(a, false);
      auto [e, f] = split(b, false);
      return {c, d, e, f};
    }
  }
}

// Rotated superellipse |u|^3 + |v|^3 <= 1 rasterized at pixel centers.
std::vector<std::uint8_t> DrawBlob(const Rect& cell, int w, int h,
                                   std::mt19937_64& rng, bool* fits) {
  std::uniform_real_distribution<double> extent(0.75, 0.95);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::uniform_real_distribution<double> angle(-0.4, 0.4);
  const double cw = cell.x1 - cell.x0;
  const double ch = cell.y1 - cell.y0;
  const double cx = (cell.x0 + cell.x1) / 2 + jitter(rng) * cw;
  const double cy = (cell.y0 + cell.y1) / 2 + jitter(rng) * ch;
  const double a = extent(rng) * cw / 2;
  const double b = extent(rng) * ch / 2;
  const double theta = angle(rng);
  const double ct = std::cos(theta), st = std::sin(theta);
  std::vector<std::uint8_t> shape(static_cast<std::size_t>(w) * h, 0);
  *fits = true;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double u = (dx * ct + dy * st) / a;
      const double v = (-dx * st + dy * ct) / b;
      if (std::pow(std::abs(u), 3) + std::pow(std::abs(v), 3) > 1.0) continue;
      shape[static_cast<std::size_t>(y) * w + x] = 1;
      if (x < cell.x0 + 1 || x + 1 > cell.x1 - 1 || y < cell.y0 + 1 ||
          y + 1 > cell.y1 - 1) {
        *fits = false;
      }
    }
  }
  return shape;
}

constexpr int kBlobRetries = 64;
constexpr int kSceneRetries = 16;

bool TryScene(const BenchmarkSpec& spec, const ClassList& classes,
              std::mt19937_64& rng, BenchmarkItem* item) {
  const int w = spec.width;
  const int h = spec.height;
  const int max_blobs = std::min(4, spec.classes);
  const int blobs = std::uniform_int_distribution<int>(
      std::min(spec.min_blobs, max_blobs), max_blobs)(rng);

  std::vector<int> labels(spec.classes);
  for (int k = 0; k < spec.classes; ++k) labels[k] = k + 1;
  std::shuffle(labels.begin(), labels.end(), rng);
  labels.resize(blobs);

  const std::vector<Rect> cells = Layout(blobs, w, h, rng);
  LabelRaster truth(w, h, 0);
  for (int i = 0; i < blobs; ++i) {
    std::vector<std::uint8_t> shape;
    bool placed = false;
    for (int attempt = 0; attempt < kBlobRetries && !placed; ++attempt) {
      bool fits = false;
      shape = DrawBlob(cells[i], w, h, rng, &fits);
      if (!fits) continue;
      placed = true;
      for (std::size_t p = 0; p < shape.size(); ++p) {
        if (shape[p] && truth[p] != 0) placed = false;
      }
    }
    if (!placed) {
      throw Error(fmt::format("could not place blob {} without overlap after "
                              "{} attempts",
                              i, kBlobRetries));
    }
    for (std::size_t p = 0; p < shape.size(); ++p) {
      if (shape[p]) truth[p] = static_cast<std::uint8_t>(labels[i]);
    }
  }

  const LabelRaster patches = DownsampleMajority(truth, spec.grid);
  std::sort(labels.begin(), labels.end());
  SyntheticScene scene;
  scene.grid = spec.grid;
  scene.decay = spec.decay;
  scene.noise = spec.noise;
  scene.seed = rng();
  scene.focus_layer = spec.focus_layer;
  scene.focus_head = spec.focus_head;
  scene.focus_spread = spec.focus_spread;
  std::uniform_real_distribution<double> direction(0.0, 2 * std::numbers::pi);
  for (int label : labels) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(spec.grid) * spec.grid);
    double cr = 0, cc = 0;
    int n = 0;
    for (int p = 0; p < spec.grid * spec.grid; ++p) {
      if (patches[p] != label) continue;
      mask[p] = 1;
      cr += p / spec.grid;
      cc += p % spec.grid;
      ++n;
    }
    if (n == 0) return false;
    cr /= n;
    cc /= n;
    // The peak sits peak_offset of the way from the centroid to the far
    // end of the blob along a random direction.
    const double phi = direction(rng);
    const double dr = std::sin(phi);
    const double dc = std::cos(phi);
    double reach = -INFINITY;
    for (int p = 0; p < spec.grid * spec.grid; ++p) {
      if (mask[p]) {
        reach = std::max(reach, (p / spec.grid - cr) * dr + (p % spec.grid - cc) * dc);
      }
    }
    const double tr = cr + spec.peak_offset * reach * dr;
    const double tc = cc + spec.peak_offset * reach * dc;
    double best = INFINITY;
    std::array<int, 2> peak{0, 0};
    for (int p = 0; p < spec.grid * spec.grid; ++p) {
      if (!mask[p]) continue;
      const int r = p / spec.grid;
      const int c = p % spec.grid;
      const double d = std::hypot(r - tr, c - tc);
      if (d < best) {
        best = d;
        peak = {r, c};
      }
    }
    scene.classes.push_back(classes.names[label - 1]);
    scene.masks.push_back(std::move(mask));
    scene.peaks.push_back(peak);
  }
  scene.Validate();

  RgbImage image(w, h);
  std::uniform_int_distribution<int> pixel_noise(-spec.pixel_noise,
                                                 spec.pixel_noise);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int label = truth.at(x, y);
      const Rgb base = label == 0 ? kBackground : PaletteColor(label - 1);
      Rgb c;
      for (int ch = 0; ch < 3; ++ch) {
        c[ch] = static_cast<std::uint8_t>(
            std::clamp(base[ch] + pixel_noise(rng), 1, 255));
      }
      image.set(x, y, c);
    }
  }

  item->classes_present = scene.classes;
  item->scene = std::move(scene);
  item->image = std::move(image);
  item->truth = std::move(truth);
  return true;
}

}  // namespace

Benchmark SynthBenchmark(const BenchmarkSpec& spec) {
  if (spec.images < 0 || spec.classes < 1 || spec.classes > 254 ||
      spec.grid < 1 || spec.min_blobs < 1 ||
      spec.peak_offset < 0 || spec.peak_offset > 1 || spec.width < spec.grid || spec.height < spec.grid) {
    throw ContractError("invalid benchmark sizes");
  }
  Benchmark bench;
  constexpr int kVocab = sizeof(kVocabulary) / sizeof(kVocabulary[0]);
  for (int k = 0; k < spec.classes; ++k) {
    bench.classes.names.push_back(k < kVocab ? std::string(kVocabulary[k])
                                             : fmt::format("class{}", k + 1));
  }
  bench.palette.push_back(kBackground);
  for (int k = 0; k < spec.classes; ++k) bench.palette.push_back(PaletteColor(k));

  for (int i = 0; i < spec.images; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                      static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    BenchmarkItem item;
    item.name = fmt::format("{:04d}", i);
    bool ok = false;
    for (int attempt = 0; attempt < kSceneRetries && !ok; ++attempt) {
      ok = TryScene(spec, bench.classes, rng, &item);
    }
    if (!ok) {
      throw Error(fmt::format("image {}: every planted blob must cover at "
                              "least one patch; giving up after {} attempts",
                              i, kSceneRetries));
    }
    bench.items.push_back(std::move(item));
  }
  return bench;
}

Manifest LoadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  Manifest manifest;
  manifest.root = std::filesystem::path(path).parent_path().string();
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.image = e.at("image").get<std::string>();
      entry.raster = e.value("raster", "");
      entry.scene = e.value("scene", "");
      entry.classes_present =
          e.at("classes_present").get<std::vector<std::string>>();
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("bad manifest {}: {}", path, e.what()));
  }
  return manifest;
}

void WriteBenchmark(const Benchmark& benchmark, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"images", "gt", "scenes"}) {
    fs::create_directories(fs::path(dir) / sub, ec);
    if (ec) throw IoError(fmt::format("cannot create {}/{}: {}", dir, sub,
                                      ec.message()));
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const BenchmarkItem& item : benchmark.items) {
    const std::string image = "images/" + item.name + ".ppm";
    const std::string raster = "gt/" + item.name + ".pgm";
    const std::string scene = "scenes/" + item.name + ".json";
    SavePpm(item.image, (fs::path(dir) / image).string());
    SaveLabelRaster(item.truth, (fs::path(dir) / raster).string());
    SaveScene(item.scene, (fs::path(dir) / scene).string());
    entries.push_back({{"image", image},
                       {"raster", raster},
                       {"scene", scene},
                       {"classes_present", item.classes_present}});
  }
  std::ofstream manifest(fs::path(dir) / "manifest.json");
  if (!manifest) throw IoError("cannot write manifest in " + dir);
  manifest << nlohmann::json{{"entries", entries}}.dump(1) << '\n';
  SaveClassList(benchmark.classes, (fs::path(dir) / "classes.txt").string());
  nlohmann::json palette = nlohmann::json::object();
  for (int k = 0; k < benchmark.classes.size(); ++k) {
    palette[benchmark.classes.names[k]] = benchmark.palette[k + 1];
  }
  std::ofstream pal(fs::path(dir) / "palette.json");
  if (!pal) throw IoError("cannot write palette in " + dir);
  pal << palette.dump(1) << '\n';
}

}  // namespace salseg
