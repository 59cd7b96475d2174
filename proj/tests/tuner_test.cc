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

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "salseg/benchmark.h"
#include "salseg/error.h"
#include "salseg/synthetic.h"

namespace salseg {
namespace {

// Oracle backed by a plain function.
class FunctionOracle : public SimilarityOracle {
 public:
  explicit FunctionOracle(
      std::function<double(const RgbImage&, const std::string&)> f)
      : f_(std::move(f)) {}
  double Score(const RgbImage& image, const std::string& name) const override {
    return f_(image, name);
  }

 private:
  std::function<double(const RgbImage&, const std::string&)> f_;
};

bool IsBlack(const RgbImage& image) {
  for (auto b : image.bytes()) {
    if (b != 0) return false;
  }
  return true;
}

// A 4x1 image whose pixel i has red value 10 * (i + 1).
RgbImage Strip() {
  RgbImage image(4, 1);
  for (int x = 0; x < 4; ++x) image.set(x, 0, {std::uint8_t(10 * (x + 1)), 0, 0});
  return image;
}

BinaryPlane StripMask(std::initializer_list<int> on) {
  BinaryPlane m(4, 1);
  for (int x : on) m[x] = 1;
  return m;
}

// Scores 10 for the class whose mask (class k owns pixel k) is the only lit
// region, 0 otherwise.
FunctionOracle SeparableOracle() {
  return FunctionOracle([](const RgbImage& image, const std::string& name) {
    const int k = name[0] - 'a';
    int lit = -1;
    for (int x = 0; x < image.width(); ++x) {
      if (image.at(x, 0)[0] != 0) lit = lit == -1 ? x : -2;
    }
    return lit == k ? 10.0 : 0.0;
  });
}

TEST(ClassProbabilityTest, HandValues) {
  EXPECT_EQ(ClassProbability(std::vector<double>{3.5}, 0), 1.0);
  const std::vector<double> equal(4, 2.0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(ClassProbability(equal, k), 0.25);
  const std::vector<double> two = {2.0, 1.0};
  EXPECT_NEAR(ClassProbability(two, 0), 0.7311, 1e-4);
  EXPECT_NEAR(ClassProbability(two, 1), 0.2689, 1e-4);
}

TEST(ClassProbabilityTest, SumsToOneAndIsShiftInvariant) {
  const std::vector<double> scores = {0.3, -4.0, 12.5, 7.25, 900.0};
  std::vector<double> shifted = scores;
  for (double& s : shifted) s += 1234.5;
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    total += ClassProbability(scores, k);
    EXPECT_NEAR(ClassProbability(scores, k), ClassProbability(shifted, k), 1e-9);
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_THROW(ClassProbability(std::vector<double>{1.0, NAN}, 0), ContractError);
  EXPECT_THROW(ClassProbability(std::vector<double>{1.0}, 1), ContractError);
}

TEST(RewardImageTest, ConstantOracleGivesZero) {
  const FunctionOracle oracle([](const RgbImage&, const std::string&) { return 3.0; });
  const std::vector<BinaryPlane> masks = {StripMask({0}), StripMask({1, 2})};
  const std::vector<std::string> classes = {"a", "b"};
  EXPECT_EQ(RewardImage(masks, Strip(), classes, oracle), 0);
}

TEST(RewardImageTest, SeparableOracleCountsEveryClass) {
  const std::vector<BinaryPlane> masks = {StripMask({0}), StripMask({1}),
                                          StripMask({2})};
  const std::vector<std::string> classes = {"a", "b", "c"};
  EXPECT_EQ(RewardImage(masks, Strip(), classes, SeparableOracle()), 3);
}

TEST(RewardImageTest, HandComputedSoftmaxComparison) {
  // f(M1 I, c1) = 2, f(M1 I, c2) = 1, f(0, .) = 0: 0.7311 > 0.5 scores.
  // f(M2 I, c2) = 0, f(M2 I, c1) = 5: 0.0067 < 0.5 does not.
  const FunctionOracle oracle([](const RgbImage& image, const std::string& name) {
    if (IsBlack(image)) return 0.0;
    const bool first = image.at(0, 0)[0] != 0;
    if (first) return name == "c1" ? 2.0 : 1.0;
    return name == "c1" ? 5.0 : 0.0;
  });
  const std::vector<BinaryPlane> masks = {StripMask({0}), StripMask({3})};
  const std::vector<std::string> classes = {"c1", "c2"};
  EXPECT_EQ(RewardImage(masks, Strip(), classes, oracle), 1);
}

TEST(RewardImageTest, PerImageShiftLeavesRewardUnchanged) {
  const FunctionOracle base = SeparableOracle();
  const FunctionOracle shifted([&](const RgbImage& image, const std::string& name) {
    return base.Score(image, name) + (IsBlack(image) ? -7.0 : 3.0);
  });
  const std::vector<BinaryPlane> masks = {StripMask({0}), StripMask({0, 1})};
  const std::vector<std::string> classes = {"a", "b"};
  EXPECT_EQ(RewardImage(masks, Strip(), classes, base),
            RewardImage(masks, Strip(), classes, shifted));
}

TEST(RewardImageTest, MismatchedMasksAreErrors) {
  const std::vector<std::string> classes = {"a", "b"};
  EXPECT_THROW(RewardImage(std::vector<BinaryPlane>{StripMask({0})}, Strip(),
                           classes, SeparableOracle()),
               ContractError);
  EXPECT_THROW(RewardImage(std::vector<BinaryPlane>{StripMask({0}), BinaryPlane(3, 1)},
                           Strip(), classes, SeparableOracle()),
               ContractError);
}

TEST(RewardImageTest, PaletteOracleScoresMatchingShare) {
  const PaletteOracle oracle({{"red", {200, 0, 0}}, {"blue", {0, 0, 200}}}, 10, 10.0);
  RgbImage image(4, 1);
  image.set(0, 0, {205, 3, 0});
  image.set(1, 0, {0, 0, 190});
  image.set(2, 0, {0, 0, 230});
  EXPECT_DOUBLE_EQ(oracle.Score(image, "red"), 10.0 / 3.0);
  EXPECT_DOUBLE_EQ(oracle.Score(image, "blue"), 10.0 / 3.0);
  EXPECT_EQ(oracle.Score(RgbImage(2, 2), "red"), 0.0);
  EXPECT_THROW(oracle.Score(image, "green"), ContractError);
}

std::vector<ValidationImage> StripSet(int n) {
  std::vector<ValidationImage> images;
  for (int i = 0; i < n; ++i) {
    images.push_back({"img" + std::to_string(i), Strip(), {"a", "b", "c"}});
  }
  return images;
}

TEST(RewardDatasetTest, EmptySetScoresZero) {
  const RewardReport r = RewardDataset({}, PipelineConfig{},
                                       [](std::size_t, const PipelineConfig&) {
                                         return std::vector<BinaryPlane>{};
                                       },
                                       SeparableOracle());
  EXPECT_EQ(r.total, 0);
  EXPECT_TRUE(r.per_image.empty());
}

TEST(RewardDatasetTest, TotalIsSumOfIndependentImageRewards) {
  const std::vector<ValidationImage> images = StripSet(3);
  // Image i gets correct masks for its first i + 1 classes only.
  const MaskProducer produce = [](std::size_t i, const PipelineConfig&) {
    std::vector<BinaryPlane> masks;
    for (int k = 0; k < 3; ++k) {
      masks.push_back(k <= static_cast<int>(i) ? StripMask({k}) : StripMask({3}));
    }
    return masks;
  };
  const RewardReport r = RewardDataset(images, PipelineConfig{}, produce,
                                       SeparableOracle());
  int independent = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int one = RewardImage(produce(i, PipelineConfig{}), images[i].image,
                                images[i].classes_present, SeparableOracle());
    EXPECT_EQ(r.per_image[i], one);
    independent += one;
  }
  EXPECT_EQ(r.total, independent);
  EXPECT_EQ(r.total, 1 + 2 + 3);
}

TEST(RewardDatasetTest, FailedImagesCountZeroAndAreListed) {
  const std::vector<ValidationImage> images = StripSet(2);
  const MaskProducer produce = [](std::size_t i, const PipelineConfig&) {
    if (i == 0) throw ProtocolError("provider crashed");
    return std::vector<BinaryPlane>{StripMask({0}), StripMask({1}), StripMask({2})};
  };
  const RewardReport r = RewardDataset(images, PipelineConfig{}, produce,
                                       SeparableOracle());
  EXPECT_EQ(r.per_image, (std::vector<int>{0, 3}));
  EXPECT_EQ(r.total, 3);
  EXPECT_EQ(r.failures, (std::vector<std::string>{"img0"}));
}

TEST(SearchSpaceTest, ReferenceGridValues) {
  const SearchSpace space;
  EXPECT_EQ(space.layer.Values().size(), 12u);
  EXPECT_EQ(space.head.Values().size(), 12u);
  EXPECT_EQ(space.threshold.Values(),
            (std::vector<double>{0.05, 0.15, 0.25, 0.35, 0.45}));
  EXPECT_EQ(space.sigma.Values(),
            (std::vector<double>{0.01, 0.03, 0.05, 0.07, 0.09, 0.11}));
  EXPECT_EQ(space.size(), 12u * 12u * 5u * 6u);
  SearchSpace bad;
  bad.head = {3, 1, 1};
  EXPECT_THROW(bad.Validate(), ContractError);
}

TEST(SearchSpaceTest, JsonRoundTrip) {
  SearchSpace space;
  space.layer = {2, 6, 2};
  const SearchSpace back = nlohmann::json(space).get<SearchSpace>();
  EXPECT_EQ(back.layer.Values(), (std::vector<double>{2, 4, 6}));
  EXPECT_EQ(back.sigma.Values(), space.sigma.Values());
}

SearchSpace Singleton() {
  SearchSpace s;
  s.layer = {8, 8, 1};
  s.head = {10, 10, 1};
  s.threshold = {0.15, 0.15, 0.1};
  s.sigma = {0.05, 0.05, 0.02};
  return s;
}

TEST(RandomSearchTest, DefaultsAreThreeGroupsOfThirtyFour) {
  const RandomSearchOptions options;
  EXPECT_EQ(options.groups, 3);
  EXPECT_EQ(options.iters_per_group, 34);
}

TEST(RandomSearchTest, SingletonSpaceIsEvaluatedOnce) {
  int calls = 0;
  RandomSearchOptions options;
  options.groups = 1;
  const SearchResult r = RandomSearch(
      Singleton(),
      [&](const SearchPoint&) {
        ++calls;
        return Evaluation{1.5, {1.5}};
      },
      options);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(r.best, (SearchPoint{8, 10, 0.15, 0.05}));
  EXPECT_EQ(r.best_total, 1.5);
  ASSERT_EQ(r.trace.size(), 1u);
}

double Landscape(const SearchPoint& p) {
  const double dl = p.layer - 8;
  const double dh = p.head - 10;
  const double dt = (p.threshold - 0.15) / 0.1;
  const double ds = (p.sigma - 0.05) / 0.02;
  return 100.0 * std::exp(-(dl * dl + dh * dh) / 8.0 - dt * dt / 2.0 - ds * ds / 4.0);
}

TEST(RandomSearchTest, GroupsAreContiguousLayerBlocksWithoutRepeats) {
  RandomSearchOptions options;
  options.seed = 11;
  const SearchResult r = RandomSearch(
      SearchSpace{}, [](const SearchPoint& p) { return Evaluation{Landscape(p), {}}; },
      options);
  ASSERT_EQ(r.trace.size(), 3u * 34u);
  std::set<std::tuple<int, int, double, double>> seen;
  for (const TraceRecord& rec : r.trace) {
    EXPECT_GE(rec.point.layer, 1 + 4 * rec.group);
    EXPECT_LE(rec.point.layer, 4 + 4 * rec.group);
    EXPECT_TRUE(seen.emplace(rec.point.layer, rec.point.head, rec.point.threshold,
                             rec.point.sigma)
                    .second);
  }
}

TEST(RandomSearchTest, ExhaustiveBudgetFindsEnumeratedArgmax) {
  SearchSpace space;
  space.sigma = {0.05, 0.05, 0.02};
  RandomSearchOptions options;
  options.iters_per_group = 1000;
  options.seed = 3;
  const SearchResult r = RandomSearch(
      space, [](const SearchPoint& p) { return Evaluation{Landscape(p), {}}; }, options);
  EXPECT_EQ(r.trace.size(), space.size());
  EXPECT_EQ(r.best, (SearchPoint{8, 10, 0.15, 0.05}));
  EXPECT_EQ(r.best_total, 100.0);
}

TEST(RandomSearchTest, DeterministicAndIndependentOfThreading) {
  RandomSearchOptions seq;
  seq.seed = 42;
  seq.parallel = false;
  RandomSearchOptions par = seq;
  par.parallel = true;
  const Evaluator eval = [](const SearchPoint& p) { return Evaluation{Landscape(p), {}}; };
  const SearchResult a = RandomSearch(SearchSpace{}, eval, seq);
  const SearchResult b = RandomSearch(SearchSpace{}, eval, par);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].point, b.trace[i].point);
  }
  RandomSearchOptions other = seq;
  other.seed = 43;
  EXPECT_NE(RandomSearch(SearchSpace{}, eval, other).trace[0].point, a.trace[0].point);
}

TEST(RandomSearchTest, TiesGoToTheFirstRecord) {
  RandomSearchOptions options;
  options.seed = 5;
  const SearchResult r = RandomSearch(
      SearchSpace{}, [](const SearchPoint&) { return Evaluation{2.0, {}}; }, options);
  EXPECT_EQ(r.best, r.trace.front().point);
}

TEST(RandomSearchTest, ErrorsPropagate) {
  RandomSearchOptions options;
  options.groups = 13;
  EXPECT_THROW(RandomSearch(SearchSpace{},
                            [](const SearchPoint&) { return Evaluation{}; }, options),
               ContractError);
  options.groups = 3;
  EXPECT_THROW(RandomSearch(SearchSpace{},
                            [](const SearchPoint& p) -> Evaluation {
                              if (p.layer > 6) throw ProtocolError("boom");
                              return {};
                            },
                            options),
               ProtocolError);
}

TEST(RandomSearchTest, TraceRecordJsonFields) {
  const nlohmann::json j =
      TraceRecordJson({1, 4, SearchPoint{8, 10, 0.15, 0.05}, Evaluation{3, {1, 2}}});
  EXPECT_EQ(j.at("total_reward"), 3.0);
  EXPECT_EQ(j.at("per_image"), (nlohmann::json{1.0, 2.0}));
  EXPECT_EQ(j.at("config").at("layer"), 8);
  EXPECT_EQ(j.at("group"), 1);
  EXPECT_EQ(j.at("iteration"), 4);
}

TEST(StagedTuneTest, SingleSigmaSkipsStageTwo) {
  SearchSpace space;
  space.sigma = {0.07, 0.07, 0.02};
  std::atomic<int> calls = 0;
  std::atomic<int> blurred = 0;
  RandomSearchOptions options;
  const StagedTuneResult r = StagedTune(
      space, PipelineConfig{},
      [&](const PipelineConfig& c, TuneStage stage) {
        ++calls;
        blurred += stage != TuneStage::kGradCamMasks;
        return Evaluation{Landscape({c.layer, c.head, c.threshold, 0.05}), {}};
      },
      options);
  EXPECT_FALSE(r.stage2.has_value());
  EXPECT_EQ(calls, 3 * 34);
  EXPECT_EQ(blurred, 0);
  EXPECT_EQ(r.config.blur_sigma, 0.07);
}

TEST(StagedTuneTest, StagesUseTheirMasksAndMergeResults) {
  SearchSpace space;
  space.layer = {7, 9, 1};
  space.head = {9, 11, 1};
  std::mutex mu;
  std::vector<std::pair<TuneStage, PipelineConfig>> seen;
  RandomSearchOptions options;
  options.iters_per_group = 100;
  PipelineConfig base;
  base.blur_sigma = 0.03;
  const StagedTuneResult r = StagedTune(
      space, base,
      [&](const PipelineConfig& c, TuneStage stage) {
        std::lock_guard lock(mu);
        seen.emplace_back(stage, c);
        return Evaluation{Landscape({c.layer, c.head, c.threshold, c.blur_sigma}), {}};
      },
      options);
  int stage1 = 0;
  for (const auto& [stage, c] : seen) {
    if (stage == TuneStage::kGradCamMasks) {
      ++stage1;
      EXPECT_EQ(c.blur_sigma, 0.03);
    } else {
      EXPECT_EQ(stage, TuneStage::kBlurredMasks);
      EXPECT_EQ(c.layer, 8);
      EXPECT_EQ(c.head, 10);
      EXPECT_EQ(c.threshold, 0.15);
    }
  }
  EXPECT_EQ(stage1, 3 * 3 * 5);
  ASSERT_TRUE(r.stage2.has_value());
  EXPECT_EQ(r.stage2->trace.size(), 6u);
  EXPECT_EQ(r.config.layer, 8);
  EXPECT_EQ(r.config.head, 10);
  EXPECT_EQ(r.config.threshold, 0.15);
  EXPECT_EQ(r.config.blur_sigma, 0.05);
}

TEST(StagedTuneTest, RecoversPlantedLayerAndHeadFromRewards) {
  BenchmarkSpec spec;
  spec.images = 6;
  spec.min_blobs = 2;
  spec.focus_layer = 8;
  spec.focus_head = 10;
  const Benchmark bench = SynthBenchmark(spec);
  std::vector<ValidationImage> images;
  for (const auto& item : bench.items) {
    images.push_back({item.name, item.image, item.classes_present});
  }
  std::map<std::string, Rgb> palette;
  for (int k = 0; k < bench.classes.size(); ++k) {
    palette[bench.classes.names[k]] = bench.palette[k + 1];
  }
  const PaletteOracle oracle(palette);
  const ProviderFactory factory = [&](std::size_t i, int layer, int head) {
    return std::make_unique<SyntheticProvider>(bench.items[i].scene, layer, head);
  };
  SearchSpace space;
  space.layer = {6, 10, 1};
  space.head = {8, 12, 1};
  space.threshold = {0.15, 0.15, 0.1};
  space.sigma = {0.05, 0.05, 0.02};
  RandomSearchOptions options;
  options.iters_per_group = 100;
  const StagedTuneResult r =
      StagedTune(space, PipelineConfig{}, MakeRewardEvaluator(images, factory, oracle),
                 options);
  EXPECT_EQ(r.config.layer, 8);
  EXPECT_EQ(r.config.head, 10);
  for (const TraceRecord& rec : r.stage1.trace) {
    if (rec.point.layer != 8 || rec.point.head != 10) {
      EXPECT_LT(rec.result.total, r.stage1.best_total);
    }
  }
}

}  // namespace
}  // namespace salseg
