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

#include "salseg/grid_stack.h"

#include <algorithm>
#include <set>

namespace salseg {

ActivePatchSet ActivePatchSet::Full(int grid) {
  if (grid < 1) {
    throw ContractError("active patch set needs P >= 1, got " +
                        std::to_string(grid));
  }
  ActivePatchSet set;
  set.grid_ = grid;
  set.mask_.assign(static_cast<std::size_t>(grid) * grid, 1);
  return set;
}

ActivePatchSet ActivePatchSet::FromMask(int grid,
                                        std::vector<std::uint8_t> mask) {
  if (grid < 1) {
    throw ContractError("active patch set needs P >= 1, got " +
                        std::to_string(grid));
  }
  if (mask.size() != static_cast<std::size_t>(grid) * grid) {
    throw ContractError("active mask has " + std::to_string(mask.size()) +
                        " entries, expected " + std::to_string(grid * grid));
  }
  ActivePatchSet set;
  set.grid_ = grid;
  set.mask_ = std::move(mask);
  for (auto& m : set.mask_) m = m != 0 ? 1 : 0;
  return set;
}

int ActivePatchSet::count() const {
  return static_cast<int>(std::count(mask_.begin(), mask_.end(), 1));
}

ActivePatchSet ActivePatchSet::Without(std::span<const int> flat_indices) const {
  ActivePatchSet next = *this;
  for (int idx : flat_indices) {
    if (idx < 0 || idx >= patches()) {
      throw ContractError("patch index " + std::to_string(idx) +
                          " outside grid");
    }
    next.mask_[idx] = 0;
  }
  return next;
}

bool ActivePatchSet::IsSubsetOf(const ActivePatchSet& other) const {
  if (grid_ != other.grid_) return false;
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i] && !other.mask_[i]) return false;
  }
  return true;
}

void TokenSpanMap::Validate() const {
  if (prefix_length < 0) throw ContractError("negative prefix length");
  std::set<int> seen;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    if (spans[k].empty()) {
      throw ContractError("class " + std::to_string(k) + " has an empty span");
    }
    for (int idx : spans[k]) {
      if (idx < prefix_length) {
        throw ContractError("class " + std::to_string(k) + " span includes " +
                            "prefix token " + std::to_string(idx));
      }
      if (!seen.insert(idx).second) {
        throw ContractError("token " + std::to_string(idx) +
                            " appears in more than one span");
      }
    }
  }
}

}  // namespace salseg
