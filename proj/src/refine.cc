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

#include "salseg/refine.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "salseg/error.h"

namespace salseg {

AttentionStack NormalizeSalience(const GradCamStack& salience) {
  salience.Validate();
  AttentionStack out(salience.classes(), salience.grid());
  for (int k = 0; k < salience.classes(); ++k) {
    auto src = salience.class_map(k);
    auto [lo, hi] = std::minmax_element(src.begin(), src.end());
    const float range = *hi - *lo;
    auto dst = out.mutable_class_map(k);
    if (!(range > 0.0f)) continue;
    for (std::size_t p = 0; p < src.size(); ++p) {
      dst[p] = std::clamp((src[p] - *lo) / range, 0.0f, 1.0f);
    }
  }
  return out;
}

PatchMaskStack ThresholdMasks(const AttentionStack& soft, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ContractError(
        fmt::format("threshold must lie in (0, 1), got {}", threshold));
  }
  PatchMaskStack out(soft.classes(), soft.grid());
  auto src = soft.values();
  auto dst = out.mutable_values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] >= threshold ? 1.0f : 0.0f;
  }
  return out;
}

RealPlane UpsampleNearest(std::span<const float> grid_map, int grid, int width,
                          int height) {
  if (grid < 1 || grid_map.size() != static_cast<std::size_t>(grid) * grid) {
    throw ContractError("upsample input is not a P x P map");
  }
  if (width < grid || height < grid) {
    throw ContractError(fmt::format("cannot upsample a {}x{} grid to {}x{}",
                                    grid, grid, width, height));
  }
  auto cells = [grid](int size) {
    std::vector<int> cell(size);
    for (int i = 0; i < grid; ++i) {
      const int begin = static_cast<int>(static_cast<long long>(i) * size / grid);
      const int end =
          static_cast<int>(static_cast<long long>(i + 1) * size / grid);
      for (int px = begin; px < end; ++px) cell[px] = i;
    }
    return cell;
  };
  const std::vector<int> row_of = cells(height);
  const std::vector<int> col_of = cells(width);
  RealPlane out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.at(x, y) = grid_map[row_of[y] * grid + col_of[x]];
    }
  }
  return out;
}

std::vector<double> GaussianKernel1D(double sigma_px) {
  if (!(sigma_px > 0.0) || !std::isfinite(sigma_px)) {
    throw ContractError(fmt::format("blur sigma must be > 0, got {}", sigma_px));
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_px));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    taps[d + radius] = std::exp(-0.5 * d * d / (sigma_px * sigma_px));
    total += taps[d + radius];
  }
  for (double& t : taps) t /= total;
  return taps;
}

namespace {

// Half-sample symmetric reflection: -1 -> 0, n -> n - 1, periodic in 2n.
int Reflect(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

}  // namespace

RealPlane GaussianBlur(const RealPlane& map, double sigma_frac) {
  if (!(sigma_frac > 0.0)) {
    throw ContractError(
        fmt::format("blur sigma must be > 0, got {}", sigma_frac));
  }
  const int w = map.width();
  const int h = map.height();
  const std::vector<double> taps =
      GaussianKernel1D(sigma_frac * std::min(w, h));
  const int radius = static_cast<int>(taps.size() / 2);
  RealPlane rows(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        acc += taps[d + radius] * map.at(Reflect(x + d, w), y);
      }
      rows.at(x, y) = acc;
    }
  }
  RealPlane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        acc += taps[d + radius] * rows.at(x, Reflect(y + d, h));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

UnaryField BuildUnaries(const SoftMaskStack& soft, double eps) {
  if (soft.empty()) throw ContractError("no soft masks to build unaries from");
  if (!(eps > 0.0 && eps < 0.5)) {
    throw ContractError(fmt::format("unary clamp must lie in (0, 0.5), got {}",
                                    eps));
  }
  const int w = soft.front().width();
  const int h = soft.front().height();
  for (const RealPlane& plane : soft) {
    if (!plane.SameSize(w, h)) {
      throw ContractError("soft masks differ in size");
    }
  }
  const int classes = static_cast<int>(soft.size());
  UnaryField unary(classes + 1, w, h);
  std::vector<double> prob(classes + 1);
  for (int p = 0; p < w * h; ++p) {
    double top = 0.0;
    for (int k = 0; k < classes; ++k) {
      double v = soft[k][p];
      if (!(v >= -1e-9 && v <= 1.0 + 1e-9)) {
        throw ContractError(fmt::format(
            "soft mask {} has value {} outside [0, 1] at pixel {}", k, v, p));
      }
      v = std::clamp(v, 0.0, 1.0);
      top = std::max(top, v);
      prob[k + 1] = std::clamp(v, eps, 1.0 - eps);
    }
    prob[0] = std::clamp(1.0 - top, eps, 1.0 - eps);
    double z = 0.0;
    for (double v : prob) z += v;
    for (int l = 0; l <= classes; ++l) unary.at(p, l) = -std::log(prob[l] / z);
  }
  return unary;
}

LabelRaster LabelsFromQ(const MeanFieldState& q) {
  LabelRaster labels(q.width, q.height);
  for (int p = 0; p < q.pixels(); ++p) {
    int best = 0;
    for (int l = 1; l < q.labels; ++l) {
      if (q.at(p, l) > q.at(p, best)) best = l;
    }
    labels[p] = static_cast<std::uint8_t>(best);
  }
  return labels;
}

SegmentationResult RefinePipeline(const GradCamStack& salience,
                                  const RgbImage& image,
                                  const PipelineConfig& config) {
  config.Validate();
  if (salience.classes() > 254) {
    throw ContractError("label rasters hold at most 254 classes");
  }
  SegmentationResult result;
  result.normalized = NormalizeSalience(salience);
  result.patch_masks = ThresholdMasks(result.normalized, config.threshold);
  for (int k = 0; k < salience.classes(); ++k) {
    result.upsampled.push_back(UpsampleNearest(result.patch_masks.class_map(k),
                                               salience.grid(), image.width(),
                                               image.height()));
  }
  if (config.blur) {
    for (const RealPlane& plane : result.upsampled) {
      result.soft.push_back(GaussianBlur(plane, config.blur_sigma));
    }
  } else {
    result.soft = result.upsampled;
  }
  result.unaries = BuildUnaries(result.soft, config.crf_params.unary_clamp);
  if (config.crf) {
    result.q = DenseCrfMeanField(result.unaries, image, config.crf_params);
  } else {
    result.q = DenseCrf::Initialize(result.unaries);
  }
  result.labels = LabelsFromQ(result.q);
  return result;
}

}  // namespace salseg
