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

#ifndef SALSEG_PROVIDER_H_
#define SALSEG_PROVIDER_H_

#include <string>
#include <vector>

#include "salseg/grid_stack.h"

namespace salseg {

// Everything a provider needs to start a session for one image.
struct ProviderInit {
  // Image path for model-backed providers, or a free-form reference.
  std::string image;
  // Ordered class names; the order defines class index k.
  std::vector<std::string> classes;
  int layer = 8;
  int head = 10;
  int grid = 24;

  void Validate() const;
};

struct SalienceResponse {
  AttentionStack attention;
  GradientStack gradient;
};

// Answers attention + gradient queries for one image under a given set of
// still-active patches. Implementations must return zeros at inactive
// patches.
class SalienceProvider {
 public:
  virtual ~SalienceProvider() = default;

  virtual int classes() const = 0;
  virtual int grid() const = 0;
  virtual SalienceResponse Query(const ActivePatchSet& active) = 0;
};

// Checks a response against the session's K and P and the inactive-patch
// zero rule. Throws ProtocolError describing the first violation.
void ValidateResponse(const SalienceResponse& response, int classes, int grid,
                      const ActivePatchSet& active);

}  // namespace salseg

#endif  // SALSEG_PROVIDER_H_
