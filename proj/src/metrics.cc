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

#include "salseg/metrics.h"

#include <fmt/format.h>

#include "salseg/error.h"

namespace salseg {

ConfusionAccumulator::ConfusionAccumulator(int classes,
                                           std::optional<int> ignore_label)
    : labels_(classes + 1), ignore_(ignore_label) {
  if (classes < 1) throw ContractError("confusion matrix needs >= 1 class");
  counts_.assign(static_cast<std::size_t>(labels_) * labels_, 0);
}

void ConfusionAccumulator::Add(int truth, int predicted) {
  if (ignore_ && truth == *ignore_) return;
  if (truth < 0 || truth >= labels_ || predicted < 0 || predicted >= labels_) {
    throw ContractError(fmt::format("label pair ({}, {}) outside 0..{}", truth,
                                    predicted, labels_ - 1));
  }
  ++counts_[static_cast<std::size_t>(truth) * labels_ + predicted];
  ++total_;
}

void ConfusionAccumulator::Add(const LabelRaster& truth,
                               const LabelRaster& predicted) {
  if (!truth.SameSize(predicted)) {
    throw ContractError(fmt::format(
        "ground truth {}x{} and prediction {}x{} differ in size", truth.width(),
        truth.height(), predicted.width(), predicted.height()));
  }
  for (std::size_t i = 0; i < truth.size(); ++i) Add(truth[i], predicted[i]);
}

void ConfusionAccumulator::Merge(const ConfusionAccumulator& other) {
  if (other.labels_ != labels_) {
    throw ContractError("cannot merge confusion matrices of different size");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

std::vector<std::optional<double>> IouPerClass(const ConfusionAccumulator& acc) {
  const int n = acc.labels();
  std::vector<std::optional<double>> iou(n);
  for (int l = 0; l < n; ++l) {
    std::uint64_t row = 0, col = 0;
    for (int m = 0; m < n; ++m) {
      row += acc.at(l, m);
      col += acc.at(m, l);
    }
    const std::uint64_t tp = acc.at(l, l);
    const std::uint64_t denom = row + col - tp;  // TP + FN + FP
    if (denom > 0) iou[l] = static_cast<double>(tp) / static_cast<double>(denom);
  }
  return iou;
}

double MeanIou(const ConfusionAccumulator& acc, bool include_background) {
  const auto iou = IouPerClass(acc);
  double sum = 0.0;
  int count = 0;
  for (std::size_t l = include_background ? 0 : 1; l < iou.size(); ++l) {
    if (!iou[l]) continue;
    sum += *iou[l];
    ++count;
  }
  if (count == 0) throw ContractError("no scorable classes");
  return sum / count;
}

}  // namespace salseg
