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

#include "salseg/salience.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include <fmt/format.h>

#include "salseg/error.h"

namespace salseg {

GradCamStack GradCamCombine(const AttentionStack& attention,
                            const GradientStack& gradient) {
  if (!attention.SameShape(gradient)) {
    throw ContractError(fmt::format(
        "attention {}x{}x{} and gradient {}x{}x{} differ in shape",
        attention.classes(), attention.grid(), attention.grid(),
        gradient.classes(), gradient.grid(), gradient.grid()));
  }
  attention.Validate();
  gradient.Validate();
  GradCamStack out(attention.classes(), attention.grid());
  auto a = attention.values();
  auto g = gradient.values();
  auto o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = std::max(0.0f, g[i]) * a[i];
  }
  return out;
}

AttentionStack AggregateTokenMaps(const TokenMapStack& token_maps,
                                  const TokenSpanMap& spans) {
  spans.Validate();
  if (spans.spans.empty()) throw ContractError("span map has no classes");
  const int tokens = token_maps.classes();
  const int grid = token_maps.grid();
  AttentionStack out(static_cast<int>(spans.spans.size()), grid);
  for (std::size_t k = 0; k < spans.spans.size(); ++k) {
    const auto& span = spans.spans[k];
    for (int idx : span) {
      if (idx >= tokens) {
        throw ContractError(fmt::format(
            "class {} references token {} but only {} token maps exist", k,
            idx, tokens));
      }
    }
    auto dst = out.mutable_class_map(static_cast<int>(k));
    for (int p = 0; p < grid * grid; ++p) {
      double sum = 0.0;
      for (int idx : span) sum += token_maps.class_map(idx)[p];
      dst[p] = static_cast<float>(sum / static_cast<double>(span.size()));
    }
  }
  return out;
}

AttentionStack ClassSoftmax(const AttentionStack& attention,
                            double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ContractError(fmt::format("softmax temperature must be > 0, got {}",
                                    temperature));
  }
  const int classes = attention.classes();
  const int patches = attention.patches();
  AttentionStack out(classes, attention.grid());
  std::vector<double> logits(classes);
  for (int p = 0; p < patches; ++p) {
    double top = -INFINITY;
    for (int k = 0; k < classes; ++k) {
      logits[k] = attention.class_map(k)[p] / temperature;
      top = std::max(top, logits[k]);
    }
    double z = 0.0;
    for (int k = 0; k < classes; ++k) {
      logits[k] = std::exp(logits[k] - top);
      z += logits[k];
    }
    for (int k = 0; k < classes; ++k) {
      out.mutable_class_map(k)[p] = static_cast<float>(logits[k] / z);
    }
  }
  return out;
}

ActivePatchSet DropSetUpdate(std::span<const float> salience,
                             const ActivePatchSet& active) {
  if (salience.size() != static_cast<std::size_t>(active.patches())) {
    throw ContractError(fmt::format("salience has {} entries, grid has {}",
                                    salience.size(), active.patches()));
  }
  std::vector<int> candidates;
  candidates.reserve(active.patches());
  for (int p = 0; p < active.patches(); ++p) {
    if (!active.active(p)) continue;
    if (!std::isfinite(salience[p])) {
      throw ContractError(fmt::format("salience is non-finite at patch {}", p));
    }
    candidates.push_back(p);
  }
  if (candidates.empty()) {
    throw ContractError("cannot drop patches from an empty active set");
  }
  const std::size_t drop = candidates.size() / 2;
  // Highest value first; row-major order among equals.
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return salience[a] > salience[b];
  });
  return active.Without(std::span<const int>(candidates.data(), drop));
}

std::vector<float> SumOverClasses(const GradCamStack& stack) {
  std::vector<float> total(stack.patches(), 0.0f);
  for (int k = 0; k < stack.classes(); ++k) {
    auto map = stack.class_map(k);
    for (int p = 0; p < stack.patches(); ++p) total[p] += map[p];
  }
  return total;
}

AccumulatedSalience RunSalienceDropout(SalienceProvider& provider,
                                       int rounds) {
  if (rounds < 1) {
    throw ContractError(fmt::format("dropout needs >= 1 round, got {}",
                                    rounds));
  }
  const int classes = provider.classes();
  const int grid = provider.grid();
  AccumulatedSalience acc;
  acc.aggregate = GradCamStack(classes, grid);
  ActivePatchSet active = ActivePatchSet::Full(grid);
  acc.active_sets.push_back(active);

  for (int t = 0; t < rounds; ++t) {
    GradCamStack salience;
    try {
      SalienceResponse response = provider.Query(active);
      if (!response.attention.SameShape(classes, grid) ||
          !response.gradient.SameShape(classes, grid)) {
        throw ContractError(fmt::format(
            "provider answered {}x{}x{} for a {}x{}x{} session",
            response.attention.classes(), response.attention.grid(),
            response.attention.grid(), classes, grid, grid));
      }
      salience = GradCamCombine(response.attention, response.gradient);
    } catch (const std::exception& e) {
      throw Error(fmt::format("dropout round {}: {}", t + 1, e.what()));
    }
    for (int k = 0; k < classes; ++k) {
      auto map = salience.mutable_class_map(k);
      for (int p = 0; p < grid * grid; ++p) {
        if (!active.active(p)) map[p] = 0.0f;
      }
    }
    auto sum = acc.aggregate.mutable_values();
    auto add = salience.values();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += add[i];

    std::vector<float> agnostic = SumOverClasses(salience);
    acc.history.push_back(std::move(salience));
    if (active.count() > 0) active = DropSetUpdate(agnostic, active);
    acc.active_sets.push_back(active);
  }
  return acc;
}

}  // namespace salseg
