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

#ifndef SALSEG_GRID_STACK_H_
#define SALSEG_GRID_STACK_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "salseg/error.h"

namespace salseg {

struct AttentionTag {
  static constexpr const char* kName = "attention";
  static constexpr bool kNonNegative = true;
};
struct GradientTag {
  static constexpr const char* kName = "gradient";
  static constexpr bool kNonNegative = false;
};
struct GradCamTag {
  static constexpr const char* kName = "gradcam";
  static constexpr bool kNonNegative = true;
};
struct TokenMapTag {
  static constexpr const char* kName = "token map";
  static constexpr bool kNonNegative = true;
};

// Per-class salience on a P x P patch grid, stored class-major then
// row-major: index = (k * P + row) * P + col. Values are float32, which is
// also the accumulation precision used throughout the salience stage.
template <typename Tag>
class ClassGridStack {
 public:
  ClassGridStack() = default;

  // Zero-filled stack.
  ClassGridStack(int classes, int grid)
      : classes_(classes), grid_(grid) {
    CheckShape(classes, grid);
    values_.assign(static_cast<std::size_t>(classes) * grid * grid, 0.0f);
  }

  // Takes ownership of `values` and validates shape and value invariants.
  ClassGridStack(int classes, int grid, std::vector<float> values)
      : classes_(classes), grid_(grid), values_(std::move(values)) {
    CheckShape(classes, grid);
    if (values_.size() != static_cast<std::size_t>(classes) * grid * grid) {
      throw ContractError(std::string(Tag::kName) + " stack expects " +
                          std::to_string(classes * grid * grid) +
                          " values, got " + std::to_string(values_.size()));
    }
    Validate();
  }

  int classes() const { return classes_; }
  int grid() const { return grid_; }
  int patches() const { return grid_ * grid_; }
  std::size_t size() const { return values_.size(); }

  float at(int k, int row, int col) const { return values_[Index(k, row, col)]; }
  float& at(int k, int row, int col) { return values_[Index(k, row, col)]; }

  std::span<const float> values() const { return values_; }
  std::span<float> mutable_values() { return values_; }

  std::span<const float> class_map(int k) const {
    return std::span<const float>(values_).subspan(
        static_cast<std::size_t>(k) * patches(), patches());
  }
  std::span<float> mutable_class_map(int k) {
    return std::span<float>(values_).subspan(
        static_cast<std::size_t>(k) * patches(), patches());
  }

  bool SameShape(int classes, int grid) const {
    return classes_ == classes && grid_ == grid;
  }
  template <typename Other>
  bool SameShape(const ClassGridStack<Other>& other) const {
    return SameShape(other.classes(), other.grid());
  }

  // Re-checks the value invariants after in-place edits through at() or
  // mutable_values().
  void Validate() const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const float v = values_[i];
      if (!std::isfinite(v)) {
        throw ContractError(std::string(Tag::kName) +
                            " stack has non-finite value at flat index " +
                            std::to_string(i));
      }
      if (Tag::kNonNegative && v < 0.0f) {
        throw ContractError(std::string(Tag::kName) +
                            " stack has negative value " + std::to_string(v) +
                            " at flat index " + std::to_string(i));
      }
    }
  }

  friend bool operator==(const ClassGridStack&, const ClassGridStack&) = default;

 private:
  static void CheckShape(int classes, int grid) {
    if (classes < 1 || grid < 1) {
      throw ContractError(std::string(Tag::kName) + " stack needs K >= 1 and "
                          "P >= 1, got K=" + std::to_string(classes) +
                          " P=" + std::to_string(grid));
    }
  }
  std::size_t Index(int k, int row, int col) const {
    return (static_cast<std::size_t>(k) * grid_ + row) * grid_ + col;
  }

  int classes_ = 0;
  int grid_ = 0;
  std::vector<float> values_;
};

using AttentionStack = ClassGridStack<AttentionTag>;
using GradientStack = ClassGridStack<GradientTag>;
using GradCamStack = ClassGridStack<GradCamTag>;
// One P x P attention map per prompt token; "classes" counts tokens.
using TokenMapStack = ClassGridStack<TokenMapTag>;

// Patches of the P x P grid that have not been dropped yet.
class ActivePatchSet {
 public:
  ActivePatchSet() = default;
  static ActivePatchSet Full(int grid);
  // `mask` is row-major with P * P entries, nonzero = active.
  static ActivePatchSet FromMask(int grid, std::vector<std::uint8_t> mask);

  int grid() const { return grid_; }
  int patches() const { return grid_ * grid_; }
  int count() const;
  bool empty() const { return count() == 0; }
  bool active(int row, int col) const { return mask_[row * grid_ + col] != 0; }
  bool active(int flat) const { return mask_[flat] != 0; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  ActivePatchSet Without(std::span<const int> flat_indices) const;
  bool IsSubsetOf(const ActivePatchSet& other) const;

  friend bool operator==(const ActivePatchSet&, const ActivePatchSet&) = default;

 private:
  int grid_ = 0;
  std::vector<std::uint8_t> mask_;
};

// Sum over dropout iterations of the per-iteration GradCAM maps, with the
// history it was summed from.
struct AccumulatedSalience {
  GradCamStack aggregate;
  std::vector<GradCamStack> history;
  // active_sets[t] is the set the provider saw in iteration t; the last
  // entry is the set remaining after the final drop.
  std::vector<ActivePatchSet> active_sets;

  int classes() const { return aggregate.classes(); }
  int grid() const { return aggregate.grid(); }
  int rounds() const { return static_cast<int>(history.size()); }
};

// Token indices of each class name inside the prompt. Indices below
// `prefix_length` belong to the fixed prompt prefix and never map to a class.
struct TokenSpanMap {
  std::vector<std::vector<int>> spans;
  int prefix_length = 3;

  // Disjoint, nonempty, beyond the prefix.
  void Validate() const;
};

}  // namespace salseg

#endif  // SALSEG_GRID_STACK_H_
