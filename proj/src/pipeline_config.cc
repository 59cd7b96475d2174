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

#include "salseg/pipeline_config.h"

#include <array>
#include <cmath>
#include <utility>

#include <fmt/format.h>
#include <sodium.h>

#include "salseg/error.h"

namespace salseg {

void CrfParams::Validate() const {
  if (iterations < 0) throw ContractError("CRF iterations must be >= 0");
  if (!(smooth_sigma > 0.0) || !(appearance_sigma_xy > 0.0) ||
      !(appearance_sigma_rgb > 0.0)) {
    throw ContractError("CRF kernel sigmas must be > 0");
  }
  if (smooth_weight < 0.0 || appearance_weight < 0.0) {
    throw ContractError("CRF kernel weights must be >= 0");
  }
  if (!(unary_clamp > 0.0 && unary_clamp < 0.5)) {
    throw ContractError(
        fmt::format("unary clamp must lie in (0, 0.5), got {}", unary_clamp));
  }
}

void PipelineConfig::Validate() const {
  if (layer < 1 || head < 1) throw ContractError("layer and head are 1-based");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ContractError(
        fmt::format("threshold must lie in (0, 1), got {}", threshold));
  }
  if (blur && !(blur_sigma > 0.0)) {
    throw ContractError(
        fmt::format("blur sigma must be > 0, got {}", blur_sigma));
  }
  if (dropout_rounds < 1) throw ContractError("dropout rounds must be >= 1");
  crf_params.Validate();
}

namespace {

template <typename E, std::size_t N>
using EnumNames = std::array<std::pair<E, const char*>, N>;

constexpr EnumNames<CrfMethod, 4> kCrfMethodNames{{
    {CrfMethod::kExact, "exact"},
    {CrfMethod::kTruncated, "truncated"},
    {CrfMethod::kLattice, "lattice"},
    {CrfMethod::kAuto, "auto"},
}};
constexpr EnumNames<SalienceMode, 2> kSalienceModeNames{{
    {SalienceMode::kGradCam, "gradcam"},
    {SalienceMode::kAttentionSoftmax, "attention_softmax"},
}};

template <typename E, std::size_t N>
const char* EnumName(const EnumNames<E, N>& names, E value) {
  for (const auto& [v, name] : names) {
    if (v == value) return name;
  }
  throw ContractError("unnamed enum value");
}

template <typename E, std::size_t N>
E EnumValue(const EnumNames<E, N>& names, const nlohmann::json& j,
            const char* what) {
  const std::string text = j.get<std::string>();
  for (const auto& [v, name] : names) {
    if (text == name) return v;
  }
  throw ContractError(fmt::format("unknown {} \"{}\"", what, text));
}

}  // namespace

void to_json(nlohmann::json& j, const CrfParams& p) {
  j = nlohmann::json{{"iterations", p.iterations},
                     {"smooth_weight", p.smooth_weight},
                     {"smooth_sigma", p.smooth_sigma},
                     {"appearance_weight", p.appearance_weight},
                     {"appearance_sigma_xy", p.appearance_sigma_xy},
                     {"appearance_sigma_rgb", p.appearance_sigma_rgb},
                     {"unary_clamp", p.unary_clamp},
                     {"method", EnumName(kCrfMethodNames, p.method)}};
}

void from_json(const nlohmann::json& j, CrfParams& p) {
  p.iterations = j.value("iterations", p.iterations);
  p.smooth_weight = j.value("smooth_weight", p.smooth_weight);
  p.smooth_sigma = j.value("smooth_sigma", p.smooth_sigma);
  p.appearance_weight = j.value("appearance_weight", p.appearance_weight);
  p.appearance_sigma_xy = j.value("appearance_sigma_xy", p.appearance_sigma_xy);
  p.appearance_sigma_rgb =
      j.value("appearance_sigma_rgb", p.appearance_sigma_rgb);
  p.unary_clamp = j.value("unary_clamp", p.unary_clamp);
  if (j.contains("method")) {
    p.method = EnumValue(kCrfMethodNames, j.at("method"), "CRF method");
  }
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json{{"layer", c.layer},
                     {"head", c.head},
                     {"threshold", c.threshold},
                     {"blur_sigma", c.blur_sigma},
                     {"dropout_rounds", c.dropout_rounds},
                     {"mode", EnumName(kSalienceModeNames, c.mode)},
                     {"blur", c.blur},
                     {"crf", c.crf},
                     {"crf_params", c.crf_params}};
}

// Missing keys keep their defaults so partial config files work.
void from_json(const nlohmann::json& j, PipelineConfig& c) {
  c.layer = j.value("layer", c.layer);
  c.head = j.value("head", c.head);
  c.threshold = j.value("threshold", c.threshold);
  c.blur_sigma = j.value("blur_sigma", c.blur_sigma);
  c.dropout_rounds = j.value("dropout_rounds", c.dropout_rounds);
  if (j.contains("mode")) {
    c.mode = EnumValue(kSalienceModeNames, j.at("mode"), "salience mode");
  }
  c.blur = j.value("blur", c.blur);
  c.crf = j.value("crf", c.crf);
  if (j.contains("crf_params")) j.at("crf_params").get_to(c.crf_params);
}

std::string ConfigHash(const PipelineConfig& config) {
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  const std::string text = nlohmann::json(config).dump();
  unsigned char digest[16];
  crypto_generichash(digest, sizeof(digest),
                     reinterpret_cast<const unsigned char*>(text.data()),
                     text.size(), nullptr, 0);
  char hex[sizeof(digest) * 2 + 1];
  sodium_bin2hex(hex, sizeof(hex), digest, sizeof(digest));
  return hex;
}

}  // namespace salseg
