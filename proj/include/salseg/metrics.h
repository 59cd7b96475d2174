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

#ifndef SALSEG_METRICS_H_
#define SALSEG_METRICS_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "salseg/image.h"

namespace salseg {

// (K + 1) x (K + 1) pixel counts indexed by (ground truth, prediction).
// Label 0 is background. Pixels whose ground truth equals the ignore label
// are skipped.
class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(int classes,
                                std::optional<int> ignore_label = 255);

  int labels() const { return labels_; }
  std::uint64_t at(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * labels_ + predicted];
  }
  std::uint64_t total() const { return total_; }

  void Add(const LabelRaster& truth, const LabelRaster& predicted);
  void Add(int truth, int predicted);
  // Associative, commutative merge of two accumulators of the same size.
  void Merge(const ConfusionAccumulator& other);

  friend bool operator==(const ConfusionAccumulator&,
                         const ConfusionAccumulator&) = default;

 private:
  int labels_;
  std::optional<int> ignore_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> counts_;
};

// IoU per label; nullopt where TP + FP + FN = 0.
std::vector<std::optional<double>> IouPerClass(const ConfusionAccumulator& acc);

// Mean over labels with defined IoU. Background (label 0) joins the mean
// only when include_background is set. Throws ContractError("no scorable
// classes") when nothing is defined.
double MeanIou(const ConfusionAccumulator& acc,
               bool include_background = false);

}  // namespace salseg

#endif  // SALSEG_METRICS_H_
