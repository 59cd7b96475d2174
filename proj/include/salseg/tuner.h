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

#ifndef SALSEG_TUNER_H_
#define SALSEG_TUNER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "salseg/image.h"
#include "salseg/pipeline_config.h"
#include "salseg/provider.h"

namespace salseg {

// f(image, class name) -> similarity score. Score must be thread-safe and
// deterministic.
class SimilarityOracle {
 public:
  virtual ~SimilarityOracle() = default;
  virtual double Score(const RgbImage& image,
                       const std::string& class_name) const = 0;
  // Square input side the oracle expects; 0 keeps the native resolution.
  virtual int input_size() const { return 0; }
};

// Synthetic scorer for datasets with one flat color per class: the share of
// non-black pixels that match the class color, times `scale`.
class PaletteOracle : public SimilarityOracle {
 public:
  PaletteOracle(std::map<std::string, Rgb> palette, int tolerance = 24,
                double scale = 10.0, int input_size = 0);
  double Score(const RgbImage& image,
               const std::string& class_name) const override;
  int input_size() const override { return input_size_; }

 private:
  std::map<std::string, Rgb> palette_;
  int tolerance_;
  double scale_;
  int input_size_;
};

// exp(scores[k]) / sum_j exp(scores[j]), max-subtracted.
double ClassProbability(std::span<const double> scores, std::size_t k);

// Scores `image` against every present class and returns P(image, k).
double ClassProbability(const SimilarityOracle& oracle, const RgbImage& image,
                        std::span<const std::string> classes_present,
                        std::size_t k);

// Number of present classes k whose masked image M_k (x) I is more likely
// to be class k than the all-black image is. masks[k] pairs with
// classes_present[k].
int RewardImage(std::span<const BinaryPlane> masks, const RgbImage& image,
                std::span<const std::string> classes_present,
                const SimilarityOracle& oracle);

struct ValidationImage {
  std::string name;
  RgbImage image;
  // Weak labels; also the provider's class list for this image.
  std::vector<std::string> classes_present;
};

struct RewardReport {
  PipelineConfig config;
  std::vector<int> per_image;
  int total = 0;
  // Images whose pipeline run failed; each contributed reward 0.
  std::vector<std::string> failures;
};

// Produces one binary pixel mask per present class of image `index`.
using MaskProducer = std::function<std::vector<BinaryPlane>(
    std::size_t index, const PipelineConfig& config)>;

RewardReport RewardDataset(std::span<const ValidationImage> images,
                           const PipelineConfig& config,
                           const MaskProducer& produce,
                           const SimilarityOracle& oracle);

// Which masks the reward scores during tuning.
enum class TuneStage {
  kGradCamMasks,  // one round, no blur or CRF, thresholded and upsampled
  kBlurredMasks,  // all rounds, blurred, binarized at 0.5, before CRF
  kFinalMasks,    // full pipeline labels
};

using ProviderFactory = std::function<std::unique_ptr<SalienceProvider>(
    std::size_t index, int layer, int head)>;

// Runs the salience + refinement pipeline truncated at `stage`.
MaskProducer MakeStageMaskProducer(std::span<const ValidationImage> images,
                                   ProviderFactory factory, TuneStage stage);

// Inclusive arithmetic progression start + n * step <= end.
struct SearchAxis {
  double start = 0;
  double end = 0;
  double step = 1;

  std::vector<double> Values() const;
};

struct SearchSpace {
  SearchAxis layer{1, 12, 1};
  SearchAxis head{1, 12, 1};
  SearchAxis threshold{0.05, 0.5, 0.1};
  SearchAxis sigma{0.01, 0.11, 0.02};

  void Validate() const;
  std::size_t size() const;
};

void to_json(nlohmann::json& j, const SearchSpace& s);
void from_json(const nlohmann::json& j, SearchSpace& s);

struct SearchPoint {
  int layer = 0;
  int head = 0;
  double threshold = 0;
  double sigma = 0;

  friend bool operator==(const SearchPoint&, const SearchPoint&) = default;
};

void to_json(nlohmann::json& j, const SearchPoint& p);

struct Evaluation {
  double total = 0;
  std::vector<double> per_image;
};

using Evaluator = std::function<Evaluation(const SearchPoint&)>;

struct TraceRecord {
  int group = 0;
  int iteration = 0;
  SearchPoint point;
  Evaluation result;
};

// {"config": ..., "total_reward": ..., "per_image": [...], "group": ...,
//  "iteration": ...}
nlohmann::json TraceRecordJson(const TraceRecord& record);

struct SearchResult {
  SearchPoint best;
  double best_total = 0;
  std::vector<TraceRecord> trace;
};

struct RandomSearchOptions {
  int groups = 3;
  int iters_per_group = 34;
  std::uint64_t seed = 0;
  // Run groups on separate threads; Evaluator must then be thread-safe.
  bool parallel = true;
};

// Splits the layer axis into `groups` contiguous blocks and samples each
// block's grid uniformly without replacement. The best total wins; ties go
// to the earliest record in (group, iteration) order.
SearchResult RandomSearch(const SearchSpace& space, const Evaluator& evaluate,
                          const RandomSearchOptions& options);

using StageEvaluator =
    std::function<Evaluation(const PipelineConfig& config, TuneStage stage)>;

struct StagedTuneResult {
  PipelineConfig config;
  SearchResult stage1;
  // Empty when the sigma axis holds a single value.
  std::optional<SearchResult> stage2;
};

// Stage 1 searches (layer, head, threshold) on GradCAM-mask rewards. Stage 2
// fixes them and searches the blur sigma on blurred pre-CRF masks.
StagedTuneResult StagedTune(const SearchSpace& space,
                            const PipelineConfig& base,
                            const StageEvaluator& evaluate,
                            const RandomSearchOptions& options);

// Reward-backed StageEvaluator over a validation set.
StageEvaluator MakeRewardEvaluator(std::span<const ValidationImage> images,
                                   ProviderFactory factory,
                                   const SimilarityOracle& oracle);

}  // namespace salseg

#endif  // SALSEG_TUNER_H_
