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

#include "salseg/dense_crf.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "salseg/error.h"
#include "crf_oracle.h"
#include "test_util.h"

namespace salseg {
namespace {

UnaryField RandomUnaries(std::mt19937_64& rng, int labels, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 5.0);
  UnaryField out(labels, w, h);
  for (double& v : out.values) v = u(rng);
  return out;
}

CrfParams RandomParams(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> weight(0.0, 5.0);
  std::uniform_real_distribution<double> sigma(0.5, 60.0);
  CrfParams p;
  p.smooth_weight = weight(rng);
  p.smooth_sigma = sigma(rng);
  p.appearance_weight = weight(rng);
  p.appearance_sigma_xy = sigma(rng);
  p.appearance_sigma_rgb = sigma(rng);
  p.method = CrfMethod::kExact;
  return p;
}

void ExpectRowsSumToOne(const MeanFieldState& q) {
  for (int p = 0; p < q.pixels(); ++p) {
    double sum = 0.0;
    for (double v : q.pixel(p)) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(DenseCrfTest, OneStepMatchesBruteForceOnTinyImages) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int side = 2 + trial % 2;
    const int labels = 2 + (trial / 2) % 2;
    const RgbImage image = testing::RandomImage(rng, side, side);
    const UnaryField u = RandomUnaries(rng, labels, side, side);
    const CrfParams p = RandomParams(rng);
    const DenseCrf crf(image, p);
    const MeanFieldState q0 = DenseCrf::Initialize(u);
    const MeanFieldState got = crf.Step(u, q0);
    const MeanFieldState want = testing::BruteForceStep(u, q0, image, p);
    for (std::size_t i = 0; i < got.values.size(); ++i) {
      ASSERT_NEAR(got.values[i], want.values[i], 1e-8) << "trial " << trial;
    }
  }
}

TEST(DenseCrfTest, TwoByOneHandOracle) {
  RgbImage image(2, 1);
  image.set(0, 0, {10, 20, 30});
  image.set(1, 0, {12, 20, 30});
  UnaryField u(2, 2, 1);
  u.at(0, 0) = 0.2;
  u.at(0, 1) = 1.5;
  u.at(1, 0) = 2.0;
  u.at(1, 1) = 0.1;
  CrfParams p;
  p.iterations = 1;
  const MeanFieldState q = DenseCrfMeanField(u, image, p);
  // Both pixels see each other at distance 1 with color distance 2.
  const double k = 3.0 * std::exp(-1.0 / 18.0) +
                   4.0 * std::exp(-1.0 / (2 * 49.0 * 49.0) - 4.0 / 50.0);
  auto init = [&](int px, int l) {
    const double a = std::exp(-u.at(px, 0));
    const double b = std::exp(-u.at(px, 1));
    return (l == 0 ? a : b) / (a + b);
  };
  for (int px = 0; px < 2; ++px) {
    const int other = 1 - px;
    const double e0 = u.at(px, 0) + k * (1 - init(other, 0));
    const double e1 = u.at(px, 1) + k * (1 - init(other, 1));
    const double q0 = std::exp(-e0) / (std::exp(-e0) + std::exp(-e1));
    EXPECT_NEAR(q.at(px, 0), q0, 1e-8);
    EXPECT_NEAR(q.at(px, 1), 1 - q0, 1e-8);
  }
}

TEST(DenseCrfTest, RowsSumToOneAfterEveryIteration) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const RgbImage image = testing::RandomImage(rng, 3, 3);
    const UnaryField u = RandomUnaries(rng, 3, 3, 3);
    const DenseCrf crf(image, RandomParams(rng));
    MeanFieldState q = DenseCrf::Initialize(u);
    ExpectRowsSumToOne(q);
    for (int it = 0; it < 10; ++it) {
      q = crf.Step(u, q);
      ExpectRowsSumToOne(q);
    }
  }
}

TEST(DenseCrfTest, ZeroWeightsKeepTheInitialization) {
  std::mt19937_64 rng(13);
  const RgbImage image = testing::RandomImage(rng, 3, 3);
  const UnaryField u = RandomUnaries(rng, 3, 3, 3);
  CrfParams p;
  p.smooth_weight = 0.0;
  p.appearance_weight = 0.0;
  p.iterations = 7;
  const MeanFieldState init = DenseCrf::Initialize(u);
  const MeanFieldState q = DenseCrfMeanField(u, image, p);
  for (std::size_t i = 0; i < q.values.size(); ++i) {
    EXPECT_NEAR(q.values[i], init.values[i], 1e-8);
  }
}

TEST(DenseCrfTest, UniformUnariesWithZeroWeightsStayUniform) {
  std::mt19937_64 rng(14);
  CrfParams p;
  p.smooth_weight = 0.0;
  p.appearance_weight = 0.0;
  const MeanFieldState q = DenseCrfMeanField(
      UnaryField(4, 3, 2, 1.3), testing::RandomImage(rng, 3, 2), p);
  for (double v : q.values) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(DenseCrfTest, ZeroIterationsReturnsInitialization) {
  std::mt19937_64 rng(15);
  const UnaryField u = RandomUnaries(rng, 2, 4, 4);
  CrfParams p;
  p.iterations = 0;
  const MeanFieldState q =
      DenseCrfMeanField(u, testing::RandomImage(rng, 4, 4), p);
  EXPECT_EQ(q.values, DenseCrf::Initialize(u).values);
}

TEST(DenseCrfTest, RejectsNonFiniteUnariesAndShapeMismatch) {
  std::mt19937_64 rng(16);
  const RgbImage image = testing::RandomImage(rng, 2, 2);
  UnaryField u(2, 2, 2, 1.0);
  u.at(3, 1) = NAN;
  EXPECT_THROW(DenseCrfMeanField(u, image, CrfParams{}), ContractError);
  EXPECT_THROW(DenseCrfMeanField(UnaryField(2, 3, 2), image, CrfParams{}),
               ContractError);
}

TEST(DenseCrfTest, AutoPicksExactForSmallImagesAndTruncatedAbove) {
  std::mt19937_64 rng(17);
  EXPECT_EQ(DenseCrf(testing::RandomImage(rng, 32, 32), CrfParams{}).method(),
            CrfMethod::kExact);
  EXPECT_EQ(DenseCrf(testing::RandomImage(rng, 33, 32), CrfParams{}).method(),
            CrfMethod::kTruncated);
}

// Piecewise-constant colors with mild noise, like the synthetic benchmark.
RgbImage BlockImage(std::mt19937_64& rng, int side) {
  std::uniform_int_distribution<int> noise(-4, 4);
  const Rgb colors[] = {{96, 96, 96}, {200, 60, 60}, {60, 180, 70}, {70, 90, 210}};
  RgbImage image(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const Rgb base = colors[(x * 2 / side) + 2 * (y * 2 / side)];
      Rgb c;
      for (int ch = 0; ch < 3; ++ch) {
        c[ch] = static_cast<std::uint8_t>(std::clamp(base[ch] + noise(rng), 0, 255));
      }
      image.set(x, y, c);
    }
  }
  return image;
}

double WorstPixelL1(const LabelField& a, const LabelField& b) {
  double worst = 0.0;
  for (int p = 0; p < a.pixels(); ++p) {
    double l1 = 0.0;
    for (int l = 0; l < a.labels; ++l) l1 += std::abs(a.at(p, l) - b.at(p, l));
    worst = std::max(worst, l1);
  }
  return worst;
}

double RelativeL1(const LabelField& exact, const LabelField& approx) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < exact.values.size(); ++i) {
    num += std::abs(exact.values[i] - approx.values[i]);
    den += std::abs(exact.values[i]);
  }
  return num / den;
}

TEST(DenseCrfTest, TruncatedInferenceTracksExactWithinTwoPercent) {
  std::mt19937_64 rng(18);
  for (int side : {8, 16, 32}) {
    for (int trial = 0; trial < 3; ++trial) {
      const RgbImage image =
          trial == 0 ? testing::RandomImage(rng, side, side) : BlockImage(rng, side);
      const UnaryField u = RandomUnaries(rng, 3, side, side);
      CrfParams exact;
      exact.method = CrfMethod::kExact;
      CrfParams fast = exact;
      fast.method = CrfMethod::kTruncated;
      EXPECT_LE(WorstPixelL1(DenseCrfMeanField(u, image, exact),
                             DenseCrfMeanField(u, image, fast)),
                0.02)
          << side << " trial " << trial;
    }
  }
}

TEST(DenseCrfTest, TruncatedMessagesTrackExactMessagesAcrossBandwidths) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> sigma(0.5, 60.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int side = 8 + 8 * (trial % 4);
    const RgbImage image = trial % 2 == 0 ? BlockImage(rng, side)
                                          : testing::RandomImage(rng, side, side);
    const MeanFieldState q =
        DenseCrf::Initialize(RandomUnaries(rng, 4, side, side));
    CrfParams exact;
    exact.method = CrfMethod::kExact;
    exact.smooth_sigma = sigma(rng);
    exact.appearance_sigma_xy = sigma(rng);
    exact.appearance_sigma_rgb = sigma(rng);
    CrfParams fast = exact;
    fast.method = CrfMethod::kTruncated;
    const LabelField a = DenseCrf(image, exact).PairwiseMessages(q);
    const LabelField b = DenseCrf(image, fast).PairwiseMessages(q);
    EXPECT_LE(RelativeL1(a, b), 1e-6) << "trial " << trial;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      ASSERT_LE(std::abs(a.values[i] - b.values[i]), 0.02 * a.values[i] + 1e-9);
    }
  }
}

// The lattice is a coarse approximation of the appearance kernel; it keeps
// the overall message mass but not per-pixel accuracy.
TEST(DenseCrfTest, LatticeMessagesApproximateExactMessages) {
  std::mt19937_64 rng(20);
  const RgbImage image = BlockImage(rng, 24);
  const MeanFieldState q = DenseCrf::Initialize(RandomUnaries(rng, 3, 24, 24));
  CrfParams exact;
  exact.method = CrfMethod::kExact;
  CrfParams lattice = exact;
  lattice.method = CrfMethod::kLattice;
  const LabelField a = DenseCrf(image, exact).PairwiseMessages(q);
  const LabelField b = DenseCrf(image, lattice).PairwiseMessages(q);
  EXPECT_LE(RelativeL1(a, b), 0.5);
}

}  // namespace
}  // namespace salseg
