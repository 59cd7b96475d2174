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

#ifndef SALSEG_PIPELINE_CONFIG_H_
#define SALSEG_PIPELINE_CONFIG_H_

#include <string>

#include <nlohmann/json.hpp>

namespace salseg {

enum class CrfMethod {
  kExact,      // O(N^2) pairwise summation
  kTruncated,  // exact summation skipping pairs beyond kTruncationSigmas
  kLattice,    // permutohedral-lattice filtering; coarse approximation
  kAuto,       // exact up to kAutoExactPixels pixels, truncated above
};

// Pairs further apart than this many kernel standard deviations contribute
// at most exp(-kTruncationSigmas^2 / 2) each and are skipped by kTruncated.
inline constexpr double kTruncationSigmas = 6.5;

inline constexpr int kAutoExactPixels = 32 * 32;

struct CrfParams {
  int iterations = 10;
  double smooth_weight = 3.0;
  double smooth_sigma = 3.0;  // pixels
  double appearance_weight = 4.0;
  double appearance_sigma_xy = 49.0;  // pixels
  double appearance_sigma_rgb = 5.0;  // 0-255 color units
  double unary_clamp = 1e-3;
  CrfMethod method = CrfMethod::kAuto;

  void Validate() const;
};

// How per-class patch salience is produced before refinement.
enum class SalienceMode {
  kGradCam,          // max(0, grad) * attention, with dropout rounds
  kAttentionSoftmax, // raw attention, softmax over classes, single pass
};

struct PipelineConfig {
  int layer = 8;
  int head = 10;
  double threshold = 0.15;
  double blur_sigma = 0.05;  // fraction of the image short side
  int dropout_rounds = 4;
  SalienceMode mode = SalienceMode::kGradCam;
  bool blur = true;
  bool crf = true;
  CrfParams crf_params;

  void Validate() const;
};

void to_json(nlohmann::json& j, const CrfParams& p);
void from_json(const nlohmann::json& j, CrfParams& p);
void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

// Hex digest of the canonical JSON serialization.
std::string ConfigHash(const PipelineConfig& config);

}  // namespace salseg

#endif  // SALSEG_PIPELINE_CONFIG_H_
