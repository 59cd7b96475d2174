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

#ifndef SALSEG_DENSE_CRF_H_
#define SALSEG_DENSE_CRF_H_

#include <memory>
#include <span>
#include <vector>

#include "salseg/image.h"
#include "salseg/pipeline_config.h"

namespace salseg {

// Per-pixel values over `labels` labels, pixel-major:
// index = (y * width + x) * labels + l.
struct LabelField {
  int labels = 0;
  int width = 0;
  int height = 0;
  std::vector<double> values;

  LabelField() = default;
  LabelField(int labels, int width, int height, double fill = 0.0);

  int pixels() const { return width * height; }
  double at(int pixel, int label) const {
    return values[static_cast<std::size_t>(pixel) * labels + label];
  }
  double& at(int pixel, int label) {
    return values[static_cast<std::size_t>(pixel) * labels + label];
  }
  std::span<const double> pixel(int p) const {
    return std::span<const double>(values).subspan(
        static_cast<std::size_t>(p) * labels, labels);
  }
};

// Negative log-probabilities; label 0 is background.
using UnaryField = LabelField;
// Mean-field marginals Q; every pixel's row sums to one.
using MeanFieldState = LabelField;

// Fully connected CRF over image pixels with a Potts model and two Gaussian
// pairwise kernels:
//   smoothness  w_s * exp(-|p_i - p_j|^2 / 2 theta_gamma^2)
//   appearance  w_a * exp(-|p_i - p_j|^2 / 2 theta_alpha^2
//                         -|I_i - I_j|^2 / 2 theta_beta^2)
// Inference runs parallel mean-field updates; a pixel never messages itself.
class DenseCrf {
 public:
  DenseCrf(const RgbImage& image, const CrfParams& params);
  ~DenseCrf();
  DenseCrf(DenseCrf&&) noexcept;
  DenseCrf& operator=(DenseCrf&&) noexcept;

  // Method actually used after resolving kAuto.
  CrfMethod method() const { return method_; }

  // softmax(-unary) per pixel.
  static MeanFieldState Initialize(const UnaryField& unaries);

  // One parallel update of every pixel from `q`.
  MeanFieldState Step(const UnaryField& unaries, const MeanFieldState& q) const;

  // Initialize followed by params.iterations steps.
  MeanFieldState Infer(const UnaryField& unaries) const;

  // sum_{j != i} k(i, j) q_j(l) for both kernels combined with their
  // weights; exposed for testing the fast path against the exact one.
  LabelField PairwiseMessages(const MeanFieldState& q) const;

 private:
  struct Lattices;

  LabelField ExactMessages(const MeanFieldState& q) const;
  LabelField TruncatedMessages(const MeanFieldState& q) const;
  LabelField LatticeMessages(const MeanFieldState& q) const;
  // Adds the smoothness messages, truncated at `sigmas` standard deviations.
  void AddSmoothMessages(const MeanFieldState& q, double sigmas,
                         LabelField& msg) const;
  void CheckShape(const LabelField& field, const char* what) const;

  RgbImage image_;
  CrfParams params_;
  CrfMethod method_;
  std::unique_ptr<Lattices> lattices_;
};

// Convenience wrapper: DenseCrf(image, params).Infer(unaries).
MeanFieldState DenseCrfMeanField(const UnaryField& unaries,
                                 const RgbImage& image,
                                 const CrfParams& params);

}  // namespace salseg

#endif  // SALSEG_DENSE_CRF_H_
