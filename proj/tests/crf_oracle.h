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

#ifndef SALSEG_TESTS_CRF_ORACLE_H_
#define SALSEG_TESTS_CRF_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <vector>

#include "salseg/dense_crf.h"
#include "salseg/image.h"
#include "salseg/pipeline_config.h"

namespace salseg::testing {

// Direct transcription of one parallel mean-field update for the Potts
// model: Q_i(l) is proportional to
//   exp(-U_i(l) - sum_{j != i} k(i, j) * (1 - Q_j(l))).
inline MeanFieldState BruteForceStep(const UnaryField& u, const MeanFieldState& q,
                              const RgbImage& image, const CrfParams& p) {
  const int w = image.width();
  const int n = u.pixels();
  MeanFieldState out(u.labels, w, image.height());
  for (int i = 0; i < n; ++i) {
    std::vector<double> energy(u.labels);
    for (int l = 0; l < u.labels; ++l) {
      double pairwise = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dx = i % w - j % w;
        const double dy = i / w - j / w;
        const Rgb a = image.at(i % w, i / w);
        const Rgb b = image.at(j % w, j / w);
        double dc = 0.0;
        for (int c = 0; c < 3; ++c) dc += (a[c] - b[c]) * (a[c] - b[c]);
        const double d2 = dx * dx + dy * dy;
        const double k =
            p.smooth_weight *
                std::exp(-d2 / (2 * p.smooth_sigma * p.smooth_sigma)) +
            p.appearance_weight *
                std::exp(-d2 / (2 * p.appearance_sigma_xy *
                                p.appearance_sigma_xy) -
                         dc / (2 * p.appearance_sigma_rgb *
                               p.appearance_sigma_rgb));
        pairwise += k * (1.0 - q.at(j, l));
      }
      energy[l] = u.at(i, l) + pairwise;
    }
    double lo = energy[0];
    for (double e : energy) lo = std::min(lo, e);
    double z = 0.0;
    for (double e : energy) z += std::exp(-(e - lo));
    for (int l = 0; l < u.labels; ++l) out.at(i, l) = std::exp(-(energy[l] - lo)) / z;
  }
  return out;
}

}  // namespace salseg::testing

#endif  // SALSEG_TESTS_CRF_ORACLE_H_
