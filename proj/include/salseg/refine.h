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

#ifndef SALSEG_REFINE_H_
#define SALSEG_REFINE_H_

#include <span>
#include <vector>

#include "salseg/dense_crf.h"
#include "salseg/grid_stack.h"
#include "salseg/image.h"
#include "salseg/pipeline_config.h"

namespace salseg {

struct MaskTag {
  static constexpr const char* kName = "mask";
  static constexpr bool kNonNegative = true;
};
// Binary per-class patch masks, stored as 0/1 floats.
using PatchMaskStack = ClassGridStack<MaskTag>;

// Per-class soft masks at pixel resolution, values in [0, 1].
using SoftMaskStack = std::vector<RealPlane>;

// Per class, (x - min) / (max - min); a class map with zero range becomes
// all zeros.
AttentionStack NormalizeSalience(const GradCamStack& salience);

// 1 where value >= threshold.
PatchMaskStack ThresholdMasks(const AttentionStack& soft, double threshold);

// Nearest-patch upsampling of one P x P map. Patch row i covers pixel rows
// [floor(i * H / P), floor((i + 1) * H / P)), likewise for columns.
RealPlane UpsampleNearest(std::span<const float> grid_map, int grid, int width,
                          int height);

// Normalized 1-D Gaussian taps over [-radius, radius], radius = ceil(3 sigma).
std::vector<double> GaussianKernel1D(double sigma_px);

// Separable Gaussian blur with sigma = sigma_frac * min(W, H) pixels. Borders
// use half-sample symmetric reflection, so constants and the global mean are
// preserved.
RealPlane GaussianBlur(const RealPlane& map, double sigma_frac);

// Label 0 is background with score 1 - max_k soft_k; label k + 1 is class k.
// Scores are clamped to [eps, 1 - eps], renormalized per pixel, and returned
// as -log(probability).
UnaryField BuildUnaries(const SoftMaskStack& soft, double eps);

// Per-pixel argmax; ties go to the lower label.
LabelRaster LabelsFromQ(const MeanFieldState& q);

// Every intermediate of the refinement chain, kept for ablations.
struct SegmentationResult {
  AttentionStack normalized;
  PatchMaskStack patch_masks;
  SoftMaskStack upsampled;
  SoftMaskStack soft;  // blurred when blur is on, else == upsampled
  UnaryField unaries;
  MeanFieldState q;    // CRF output when CRF is on, else softmax(-unary)
  LabelRaster labels;
};

// normalize -> threshold on the patch grid -> upsample -> blur -> unaries ->
// CRF -> labels. Blur and CRF follow config.blur / config.crf.
SegmentationResult RefinePipeline(const GradCamStack& salience,
                                  const RgbImage& image,
                                  const PipelineConfig& config);

}  // namespace salseg

#endif  // SALSEG_REFINE_H_
