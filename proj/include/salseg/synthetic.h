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

#ifndef SALSEG_SYNTHETIC_H_
#define SALSEG_SYNTHETIC_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "salseg/provider.h"

namespace salseg {

// Planted ground truth driving the synthetic provider.
struct SyntheticScene {
  int grid = 24;
  std::vector<std::string> classes;
  // Per class, P * P row-major 0/1 patch mask.
  std::vector<std::vector<std::uint8_t>> masks;
  // Per class, (row, col) of the most discriminative patch.
  std::vector<std::array<int, 2>> peaks;
  // Attention falls off as exp(-decay * distance in patches) from the peak.
  double decay = 0.3;
  // Amplitude of the uniform [0, noise) attention noise.
  double noise = 0.1;
  std::uint64_t seed = 0;
  // When nonzero, only this layer/head sees the planted objects cleanly;
  // other layers/heads blend toward a shifted decoy with weight
  // 1 - exp(-dist^2 / (2 focus_spread^2)).
  int focus_layer = 0;
  int focus_head = 0;
  double focus_spread = 0.5;

  int class_count() const { return static_cast<int>(classes.size()); }
  void Validate() const;
};

void to_json(nlohmann::json& j, const SyntheticScene& s);
void from_json(const nlohmann::json& j, SyntheticScene& s);

SyntheticScene LoadScene(const std::string& path);
void SaveScene(const SyntheticScene& scene, const std::string& path);

// Attention per class is the planted mask times a peaked profile plus noise,
// rescaled so the strongest active patch of each class is 1. The gradient is
// +1 on the planted support and -0.1 elsewhere. Dropped patches read zero.
// Query is a pure function of (scene, layer, head, active set).
class SyntheticProvider : public SalienceProvider {
 public:
  explicit SyntheticProvider(SyntheticScene scene, int layer = 1,
                             int head = 1);

  int classes() const override { return scene_.class_count(); }
  int grid() const override { return scene_.grid; }
  SalienceResponse Query(const ActivePatchSet& active) override;

  // Blend weight of the true scene for this layer/head, in (0, 1].
  double quality() const { return quality_; }
  const SyntheticScene& scene() const { return scene_; }

 private:
  SyntheticScene scene_;
  double quality_;
  // Decoy offset (rows, cols), cyclic.
  int shift_row_;
  int shift_col_;
};

}  // namespace salseg

#endif  // SALSEG_SYNTHETIC_H_
