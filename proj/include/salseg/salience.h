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

#ifndef SALSEG_SALIENCE_H_
#define SALSEG_SALIENCE_H_

#include <span>

#include "salseg/grid_stack.h"
#include "salseg/provider.h"

namespace salseg {

// out = max(0, grad) * attn, elementwise.
GradCamStack GradCamCombine(const AttentionStack& attention,
                            const GradientStack& gradient);

// Class map k is the arithmetic mean of the token maps listed in
// spans.spans[k].
AttentionStack AggregateTokenMaps(const TokenMapStack& token_maps,
                                  const TokenSpanMap& spans);

// Softmax across the class axis at every patch.
AttentionStack ClassSoftmax(const AttentionStack& attention,
                            double temperature = 1.0);

// Drops floor(|active| / 2) active patches with the highest `salience`
// (P * P, row-major). Equal values go in ascending row-major order, so the
// result is deterministic under ties.
ActivePatchSet DropSetUpdate(std::span<const float> salience,
                             const ActivePatchSet& active);

// Class-agnostic salience: sum over classes at each patch.
std::vector<float> SumOverClasses(const GradCamStack& stack);

// Runs `rounds` query/combine/drop iterations against `provider` and sums
// the per-iteration GradCAM maps. Entries at patches already dropped are
// forced to zero before accumulation.
AccumulatedSalience RunSalienceDropout(SalienceProvider& provider, int rounds);

}  // namespace salseg

#endif  // SALSEG_SALIENCE_H_
