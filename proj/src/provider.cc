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

#include "salseg/provider.h"

#include <cmath>

#include <fmt/format.h>

#include "salseg/error.h"

namespace salseg {

void ProviderInit::Validate() const {
  if (classes.empty()) throw ContractError("provider init needs >= 1 class");
  if (layer < 1 || head < 1 || grid < 1) {
    throw ContractError(fmt::format(
        "provider init needs layer, head, grid >= 1 (got {}, {}, {})", layer,
        head, grid));
  }
}

namespace {

template <typename Stack>
void CheckStack(const Stack& stack, const char* name, int classes, int grid,
                const ActivePatchSet& active) {
  if (!stack.SameShape(classes, grid)) {
    throw ProtocolError(fmt::format("{} tensor is {}x{}x{}, session expects "
                                    "{}x{}x{}",
                                    name, stack.classes(), stack.grid(),
                                    stack.grid(), classes, grid, grid));
  }
  const int patches = grid * grid;
  for (int k = 0; k < classes; ++k) {
    auto map = stack.class_map(k);
    for (int p = 0; p < patches; ++p) {
      if (!std::isfinite(map[p])) {
        throw ProtocolError(fmt::format("{} is non-finite at class {} patch {}",
                                        name, k, p));
      }
      if (!active.active(p) && map[p] != 0.0f) {
        throw ProtocolError(fmt::format(
            "{} is {} at inactive patch ({}, {}) of class {}", name, map[p],
            p / grid, p % grid, k));
      }
    }
  }
}

}  // namespace

void ValidateResponse(const SalienceResponse& response, int classes, int grid,
                      const ActivePatchSet& active) {
  if (active.grid() != grid) {
    throw ProtocolError(fmt::format("active set grid {} differs from session "
                                    "grid {}",
                                    active.grid(), grid));
  }
  CheckStack(response.attention, "attention", classes, grid, active);
  CheckStack(response.gradient, "gradient", classes, grid, active);
  for (float v : response.attention.values()) {
    if (v < 0.0f) throw ProtocolError("attention has a negative value");
  }
}

}  // namespace salseg
