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
#include <fstream>

#include <fmt/format.h>

#include "salseg/error.h"

namespace salseg {
namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform [0, 1) keyed on (seed, class, patch).
double HashUniform(std::uint64_t seed, int k, int p) {
  const std::uint64_t h = SplitMix64(
      SplitMix64(seed) ^ (static_cast<std::uint64_t>(k) << 32 |
                          static_cast<std::uint32_t>(p)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

void SyntheticScene::Validate() const {
  if (grid < 1) throw ContractError("scene grid must be >= 1");
  if (classes.empty()) throw ContractError("scene has no classes");
  if (masks.size() != classes.size() || peaks.size() != classes.size()) {
    throw ContractError("scene needs one mask and one peak per class");
  }
  const std::size_t patches = static_cast<std::size_t>(grid) * grid;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    if (masks[k].size() != patches) {
      throw ContractError(fmt::format("mask {} has {} entries, expected {}", k,
                                      masks[k].size(), patches));
    }
    if (std::none_of(masks[k].begin(), masks[k].end(),
                     [](std::uint8_t v) { return v != 0; })) {
      throw ContractError(fmt::format("planted mask for '{}' is empty",
                                      classes[k]));
    }
    const auto [r, c] = peaks[k];
    if (r < 0 || r >= grid || c < 0 || c >= grid) {
      throw ContractError(fmt::format("peak of '{}' lies outside the grid",
                                      classes[k]));
    }
  }
  if (decay < 0.0 || noise < 0.0) {
    throw ContractError("decay and noise must be >= 0");
  }
  if (focus_layer < 0 || focus_head < 0 || !(focus_spread > 0.0)) {
    throw ContractError("invalid focus layer/head/spread");
  }
}

void to_json(nlohmann::json& j, const SyntheticScene& s) {
  nlohmann::json masks = nlohmann::json::array();
  for (const auto& m : s.masks) {
    // One string row per patch row, '1' = planted.
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < s.grid; ++r) {
      std::string row;
      for (int c = 0; c < s.grid; ++c) row += m[r * s.grid + c] ? '1' : '0';
      rows.push_back(row);
    }
    masks.push_back(rows);
  }
  j = nlohmann::json{{"grid", s.grid},
                     {"classes", s.classes},
                     {"masks", masks},
                     {"peaks", s.peaks},
                     {"decay", s.decay},
                     {"noise", s.noise},
                     {"seed", s.seed},
                     {"focus_layer", s.focus_layer},
                     {"focus_head", s.focus_head},
                     {"focus_spread", s.focus_spread}};
}

void from_json(const nlohmann::json& j, SyntheticScene& s) {
  s.grid = j.at("grid").get<int>();
  s.classes = j.at("classes").get<std::vector<std::string>>();
  s.masks.clear();
  for (const auto& rows : j.at("masks")) {
    std::vector<std::uint8_t> m;
    for (const auto& row : rows) {
      for (char ch : row.get<std::string>()) m.push_back(ch == '1' ? 1 : 0);
    }
    s.masks.push_back(std::move(m));
  }
  s.peaks = j.at("peaks").get<std::vector<std::array<int, 2>>>();
  s.decay = j.value("decay", s.decay);
  s.noise = j.value("noise", s.noise);
  s.seed = j.value("seed", s.seed);
  s.focus_layer = j.value("focus_layer", 0);
  s.focus_head = j.value("focus_head", 0);
  s.focus_spread = j.value("focus_spread", 0.5);
  s.Validate();
}

SyntheticScene LoadScene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file " + path);
  try {
    return nlohmann::json::parse(in).get<SyntheticScene>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("bad scene file {}: {}", path, e.what()));
  }
}

void SaveScene(const SyntheticScene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scene file " + path);
  out << nlohmann::json(scene).dump(1) << '\n';
}

SyntheticProvider::SyntheticProvider(SyntheticScene scene, int layer, int head)
    : scene_(std::move(scene)) {
  scene_.Validate();
  if (scene_.focus_layer == 0 || scene_.focus_head == 0) {
    quality_ = 1.0;
  } else {
    const double dl = layer - scene_.focus_layer;
    const double dh = head - scene_.focus_head;
    quality_ = std::exp(-(dl * dl + dh * dh) /
                        (2.0 * scene_.focus_spread * scene_.focus_spread));
  }
  const int p = scene_.grid;
  const std::uint64_t h = SplitMix64(scene_.seed ^ 0x5eedULL);
  shift_row_ = p / 4 + static_cast<int>(h % static_cast<std::uint64_t>(p / 2 + 1));
  shift_col_ = p / 4 + static_cast<int>((h >> 20) % static_cast<std::uint64_t>(p / 2 + 1));
}

SalienceResponse SyntheticProvider::Query(const ActivePatchSet& active) {
  const int p = scene_.grid;
  const int classes = scene_.class_count();
  if (active.grid() != p) {
    throw ContractError(fmt::format("active set grid {} differs from scene "
                                    "grid {}",
                                    active.grid(), p));
  }
  SalienceResponse response{AttentionStack(classes, p),
                            GradientStack(classes, p)};
  std::vector<double> raw(static_cast<std::size_t>(p) * p);
  for (int k = 0; k < classes; ++k) {
    const auto& mask = scene_.masks[k];
    const auto [peak_r, peak_c] = scene_.peaks[k];
    auto profile = [&](int r, int c) {
      if (!mask[r * p + c]) return 0.0;
      const double dist = std::hypot(r - peak_r, c - peak_c);
      return std::exp(-scene_.decay * dist);
    };
    double top = 0.0;
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) {
        const int idx = r * p + c;
        const int dr = (r + shift_row_) % p;
        const int dc = (c + shift_col_) % p;
        const double support =
            quality_ * mask[idx] + (1.0 - quality_) * mask[dr * p + dc];
        response.gradient.at(k, r, c) =
            active.active(idx) ? (support >= 0.5 ? 1.0f : -0.1f) : 0.0f;
        raw[idx] = quality_ * profile(r, c) +
                   (1.0 - quality_) * profile(dr, dc) +
                   scene_.noise * HashUniform(scene_.seed, k, idx);
        if (active.active(idx)) top = std::max(top, raw[idx]);
      }
    }
    for (int idx = 0; idx < p * p; ++idx) {
      const double v = active.active(idx) && top > 0.0 ? raw[idx] / top : 0.0;
      response.attention.mutable_class_map(k)[idx] = static_cast<float>(v);
    }
  }
  return response;
}

}  // namespace salseg
