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

#include "salseg/tuner.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "salseg/error.h"
#include "salseg/refine.h"
#include "salseg/segmenter.h"

namespace salseg {

PaletteOracle::PaletteOracle(std::map<std::string, Rgb> palette, int tolerance,
                             double scale, int input_size)
    : palette_(std::move(palette)),
      tolerance_(tolerance),
      scale_(scale),
      input_size_(input_size) {}

double PaletteOracle::Score(const RgbImage& image,
                            const std::string& class_name) const {
  auto it = palette_.find(class_name);
  if (it == palette_.end()) {
    throw ContractError("palette oracle does not know class '" + class_name +
                        "'");
  }
  const Rgb target = it->second;
  long matching = 0;
  long lit = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Rgb c = image.at(x, y);
      if (c[0] == 0 && c[1] == 0 && c[2] == 0) continue;
      ++lit;
      bool close = true;
      for (int ch = 0; ch < 3; ++ch) {
        if (std::abs(int(c[ch]) - int(target[ch])) > tolerance_) close = false;
      }
      if (close) ++matching;
    }
  }
  return scale_ * static_cast<double>(matching) /
         static_cast<double>(std::max(lit, 1L));
}

double ClassProbability(std::span<const double> scores, std::size_t k) {
  if (k >= scores.size()) {
    throw ContractError(fmt::format("class {} not among {} present classes", k,
                                    scores.size()));
  }
  double top = -INFINITY;
  for (double s : scores) {
    if (!std::isfinite(s)) throw ContractError("non-finite oracle score");
    top = std::max(top, s);
  }
  double z = 0.0;
  for (double s : scores) z += std::exp(s - top);
  return std::exp(scores[k] - top) / z;
}

namespace {

std::vector<double> ScoreAll(const SimilarityOracle& oracle,
                             const RgbImage& image,
                             std::span<const std::string> classes) {
  std::vector<double> scores;
  scores.reserve(classes.size());
  for (const auto& name : classes) scores.push_back(oracle.Score(image, name));
  return scores;
}

}  // namespace

double ClassProbability(const SimilarityOracle& oracle, const RgbImage& image,
                        std::span<const std::string> classes_present,
                        std::size_t k) {
  if (classes_present.empty()) throw ContractError("no classes present");
  return ClassProbability(ScoreAll(oracle, image, classes_present), k);
}

int RewardImage(std::span<const BinaryPlane> masks, const RgbImage& image,
                std::span<const std::string> classes_present,
                const SimilarityOracle& oracle) {
  if (masks.size() != classes_present.size()) {
    throw ContractError(fmt::format("{} masks for {} present classes",
                                    masks.size(), classes_present.size()));
  }
  if (classes_present.empty()) return 0;
  const int side = oracle.input_size();
  const RgbImage input =
      side > 0 ? ResizeBilinear(image, side, side) : image;
  // The black image is scored once per image.
  const RgbImage black(input.width(), input.height());
  const std::vector<double> black_scores =
      ScoreAll(oracle, black, classes_present);
  int reward = 0;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    if (!masks[k].SameSize(image.width(), image.height())) {
      throw ContractError(fmt::format(
          "mask {} is {}x{}, image is {}x{}", k, masks[k].width(),
          masks[k].height(), image.width(), image.height()));
    }
    const BinaryPlane mask =
        side > 0 ? ResizeNearest(masks[k], side, side) : masks[k];
    const RgbImage masked = ApplyMask(input, mask);
    const double p_masked =
        ClassProbability(ScoreAll(oracle, masked, classes_present), k);
    const double p_black = ClassProbability(black_scores, k);
    if (p_masked > p_black) ++reward;
  }
  return reward;
}

RewardReport RewardDataset(std::span<const ValidationImage> images,
                           const PipelineConfig& config,
                           const MaskProducer& produce,
                           const SimilarityOracle& oracle) {
  RewardReport report;
  report.config = config;
  for (std::size_t i = 0; i < images.size(); ++i) {
    int reward = 0;
    try {
      const std::vector<BinaryPlane> masks = produce(i, config);
      reward = RewardImage(masks, images[i].image, images[i].classes_present,
                           oracle);
    } catch (const std::exception& e) {
      std::cerr << "warning: reward for " << images[i].name
                << " counted as 0: " << e.what() << '\n';
      report.failures.push_back(images[i].name);
    }
    report.per_image.push_back(reward);
    report.total += reward;
  }
  return report;
}

namespace {

BinaryPlane Binarize(const RealPlane& plane, double cut) {
  BinaryPlane out(plane.width(), plane.height());
  for (std::size_t i = 0; i < plane.size(); ++i) out[i] = plane[i] >= cut;
  return out;
}

}  // namespace

MaskProducer MakeStageMaskProducer(std::span<const ValidationImage> images,
                                   ProviderFactory factory, TuneStage stage) {
  return [images, factory = std::move(factory), stage](
             std::size_t index, const PipelineConfig& config) {
    const ValidationImage& item = images[index];
    std::unique_ptr<SalienceProvider> provider =
        factory(index, config.layer, config.head);
    PipelineConfig cfg = config;
    if (stage == TuneStage::kGradCamMasks) {
      cfg.dropout_rounds = 1;
      cfg.mode = SalienceMode::kGradCam;
    }
    const int w = item.image.width();
    const int h = item.image.height();
    std::vector<BinaryPlane> masks;
    if (stage == TuneStage::kFinalMasks) {
      const SegmentRun run = Segment(*provider, item.image, cfg);
      for (int k = 0; k < provider->classes(); ++k) {
        BinaryPlane m(w, h);
        for (std::size_t p = 0; p < m.size(); ++p) {
          m[p] = run.result.labels[p] == k + 1;
        }
        masks.push_back(std::move(m));
      }
      return masks;
    }
    const GradCamStack salience = ExtractSalience(*provider, cfg);
    const PatchMaskStack patch =
        ThresholdMasks(NormalizeSalience(salience), cfg.threshold);
    for (int k = 0; k < patch.classes(); ++k) {
      RealPlane up = UpsampleNearest(patch.class_map(k), patch.grid(), w, h);
      if (stage == TuneStage::kBlurredMasks) {
        up = GaussianBlur(up, cfg.blur_sigma);
      }
      masks.push_back(Binarize(up, 0.5));
    }
    return masks;
  };
}

std::vector<double> SearchAxis::Values() const {
  if (!(step > 0.0) || end < start) {
    throw ContractError(fmt::format("bad search axis [{}, {}] step {}", start,
                                    end, step));
  }
  std::vector<double> values;
  for (long n = 0;; ++n) {
    double v = start + static_cast<double>(n) * step;
    if (v > end + 1e-9 * std::max(1.0, std::abs(end))) break;
    // Keep grid points free of accumulated binary noise.
    values.push_back(std::round(v * 1e9) / 1e9);
  }
  return values;
}

void SearchSpace::Validate() const {
  for (const SearchAxis* axis : {&layer, &head, &threshold, &sigma}) {
    if (axis->Values().empty()) throw ContractError("empty search axis");
  }
}

std::size_t SearchSpace::size() const {
  return layer.Values().size() * head.Values().size() *
         threshold.Values().size() * sigma.Values().size();
}

namespace {

nlohmann::json AxisJson(const SearchAxis& a) {
  return {{"start", a.start}, {"end", a.end}, {"step", a.step}};
}

SearchAxis AxisFromJson(const nlohmann::json& j) {
  return {j.at("start").get<double>(), j.at("end").get<double>(),
          j.at("step").get<double>()};
}

}  // namespace

void to_json(nlohmann::json& j, const SearchSpace& s) {
  j = {{"layer", AxisJson(s.layer)},
       {"head", AxisJson(s.head)},
       {"threshold", AxisJson(s.threshold)},
       {"sigma", AxisJson(s.sigma)}};
}

void from_json(const nlohmann::json& j, SearchSpace& s) {
  if (j.contains("layer")) s.layer = AxisFromJson(j.at("layer"));
  if (j.contains("head")) s.head = AxisFromJson(j.at("head"));
  if (j.contains("threshold")) s.threshold = AxisFromJson(j.at("threshold"));
  if (j.contains("sigma")) s.sigma = AxisFromJson(j.at("sigma"));
  s.Validate();
}

void to_json(nlohmann::json& j, const SearchPoint& p) {
  j = {{"layer", p.layer},
       {"head", p.head},
       {"threshold", p.threshold},
       {"blur_sigma", p.sigma}};
}

nlohmann::json TraceRecordJson(const TraceRecord& record) {
  return {{"config", record.point},
          {"total_reward", record.result.total},
          {"per_image", record.result.per_image},
          {"group", record.group},
          {"iteration", record.iteration}};
}

SearchResult RandomSearch(const SearchSpace& space, const Evaluator& evaluate,
                          const RandomSearchOptions& options) {
  if (options.groups < 1 || options.iters_per_group < 1) {
    throw ContractError("random search needs groups >= 1 and iters >= 1");
  }
  std::vector<int> layers;
  for (double v : space.layer.Values()) layers.push_back(static_cast<int>(std::lround(v)));
  std::vector<int> heads;
  for (double v : space.head.Values()) heads.push_back(static_cast<int>(std::lround(v)));
  const std::vector<double> thresholds = space.threshold.Values();
  const std::vector<double> sigmas = space.sigma.Values();
  const int groups = options.groups;
  if (static_cast<int>(layers.size()) < groups) {
    throw ContractError(fmt::format("cannot split {} layer values into {} "
                                    "nonempty groups",
                                    layers.size(), groups));
  }

  std::vector<std::vector<TraceRecord>> traces(groups);
  std::vector<std::exception_ptr> errors(groups);
  auto run_group = [&](int g) {
    try {
      const std::size_t n = layers.size();
      const std::size_t base = n / groups;
      const std::size_t extra = n % groups;
      const std::size_t begin = g * base + std::min<std::size_t>(g, extra);
      const std::size_t count = base + (static_cast<std::size_t>(g) < extra ? 1 : 0);
      const std::size_t per_layer = heads.size() * thresholds.size() * sigmas.size();
      std::vector<std::size_t> order(count * per_layer);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                        static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(g)};
      std::mt19937_64 rng(seq);
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(std::min<std::size_t>(order.size(), options.iters_per_group));
      for (std::size_t it = 0; it < order.size(); ++it) {
        std::size_t idx = order[it];
        SearchPoint point;
        point.sigma = sigmas[idx % sigmas.size()];
        idx /= sigmas.size();
        point.threshold = thresholds[idx % thresholds.size()];
        idx /= thresholds.size();
        point.head = heads[idx % heads.size()];
        idx /= heads.size();
        point.layer = layers[begin + idx];
        traces[g].push_back({g, static_cast<int>(it), point, evaluate(point)});
      }
    } catch (...) {
      errors[g] = std::current_exception();
    }
  };

  if (options.parallel && groups > 1) {
    std::vector<std::jthread> workers;
    for (int g = 0; g < groups; ++g) workers.emplace_back(run_group, g);
  } else {
    for (int g = 0; g < groups; ++g) run_group(g);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SearchResult result;
  bool found = false;
  for (auto& group : traces) {
    for (auto& record : group) {
      if (!found || record.result.total > result.best_total) {
        result.best = record.point;
        result.best_total = record.result.total;
        found = true;
      }
      result.trace.push_back(std::move(record));
    }
  }
  return result;
}

namespace {

PipelineConfig WithPoint(PipelineConfig config, const SearchPoint& p) {
  config.layer = p.layer;
  config.head = p.head;
  config.threshold = p.threshold;
  config.blur_sigma = p.sigma;
  return config;
}

SearchAxis Single(double v) { return {v, v, 1.0}; }

}  // namespace

StagedTuneResult StagedTune(const SearchSpace& space,
                            const PipelineConfig& base,
                            const StageEvaluator& evaluate,
                            const RandomSearchOptions& options) {
  space.Validate();
  StagedTuneResult out;

  SearchSpace first = space;
  first.sigma = Single(base.blur_sigma);
  out.stage1 = RandomSearch(
      first,
      [&](const SearchPoint& p) {
        return evaluate(WithPoint(base, p), TuneStage::kGradCamMasks);
      },
      options);
  out.config = WithPoint(base, out.stage1.best);

  const std::vector<double> sigmas = space.sigma.Values();
  if (sigmas.size() == 1) {
    out.config.blur_sigma = sigmas.front();
    return out;
  }
  SearchSpace second;
  second.layer = Single(out.config.layer);
  second.head = Single(out.config.head);
  second.threshold = Single(out.config.threshold);
  second.sigma = space.sigma;
  RandomSearchOptions stage2_options = options;
  stage2_options.groups = 1;
  stage2_options.seed = options.seed + 1;
  out.stage2 = RandomSearch(
      second,
      [&](const SearchPoint& p) {
        return evaluate(WithPoint(base, p), TuneStage::kBlurredMasks);
      },
      stage2_options);
  out.config.blur_sigma = out.stage2->best.sigma;
  return out;
}

StageEvaluator MakeRewardEvaluator(std::span<const ValidationImage> images,
                                   ProviderFactory factory,
                                   const SimilarityOracle& oracle) {
  return [images, factory = std::move(factory), &oracle](
             const PipelineConfig& config, TuneStage stage) {
    const MaskProducer produce = MakeStageMaskProducer(images, factory, stage);
    const RewardReport report = RewardDataset(images, config, produce, oracle);
    Evaluation e;
    e.total = report.total;
    for (int r : report.per_image) e.per_image.push_back(r);
    return e;
  };
}

}  // namespace salseg
