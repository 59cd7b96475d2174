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

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "salseg/error.h"
#include "salseg/permutohedral.h"

namespace salseg {

LabelField::LabelField(int labels, int width, int height, double fill)
    : labels(labels), width(width), height(height) {
  if (labels < 1 || width < 1 || height < 1) {
    throw ContractError(fmt::format("label field needs positive sizes, got "
                                    "L={} {}x{}",
                                    labels, width, height));
  }
  values.assign(static_cast<std::size_t>(labels) * width * height, fill);
}

struct DenseCrf::Lattices {
  std::unique_ptr<PermutohedralLattice> appearance;
};

DenseCrf::DenseCrf(const RgbImage& image, const CrfParams& params)
    : image_(image), params_(params), method_(params.method) {
  params_.Validate();
  if (method_ == CrfMethod::kAuto) {
    method_ = image.pixels() <= kAutoExactPixels ? CrfMethod::kExact
                                                 : CrfMethod::kTruncated;
  }
  if (method_ == CrfMethod::kLattice) {
    const int n = image.pixels();
    std::vector<double> features(static_cast<std::size_t>(n) * 5);
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        double* f = &features[(static_cast<std::size_t>(y) * image.width() + x) * 5];
        const Rgb c = image.at(x, y);
        f[0] = x / params_.appearance_sigma_xy;
        f[1] = y / params_.appearance_sigma_xy;
        f[2] = c[0] / params_.appearance_sigma_rgb;
        f[3] = c[1] / params_.appearance_sigma_rgb;
        f[4] = c[2] / params_.appearance_sigma_rgb;
      }
    }
    lattices_ = std::make_unique<Lattices>();
    lattices_->appearance =
        std::make_unique<PermutohedralLattice>(features, n, 5);
  }
}

DenseCrf::~DenseCrf() = default;
DenseCrf::DenseCrf(DenseCrf&&) noexcept = default;
DenseCrf& DenseCrf::operator=(DenseCrf&&) noexcept = default;

void DenseCrf::CheckShape(const LabelField& field, const char* what) const {
  if (field.width != image_.width() || field.height != image_.height()) {
    throw ContractError(fmt::format("{} grid {}x{} does not match image {}x{}",
                                    what, field.width, field.height,
                                    image_.width(), image_.height()));
  }
}

MeanFieldState DenseCrf::Initialize(const UnaryField& unaries) {
  MeanFieldState q(unaries.labels, unaries.width, unaries.height);
  for (int p = 0; p < unaries.pixels(); ++p) {
    double lowest = INFINITY;
    for (int l = 0; l < unaries.labels; ++l) {
      const double u = unaries.at(p, l);
      if (!std::isfinite(u)) {
        throw ContractError(
            fmt::format("non-finite unary at pixel {} label {}", p, l));
      }
      lowest = std::min(lowest, u);
    }
    double z = 0.0;
    for (int l = 0; l < unaries.labels; ++l) {
      q.at(p, l) = std::exp(lowest - unaries.at(p, l));
      z += q.at(p, l);
    }
    for (int l = 0; l < unaries.labels; ++l) q.at(p, l) /= z;
  }
  return q;
}

LabelField DenseCrf::PairwiseMessages(const MeanFieldState& q) const {
  CheckShape(q, "Q");
  switch (method_) {
    case CrfMethod::kExact:
      return ExactMessages(q);
    case CrfMethod::kTruncated:
      return TruncatedMessages(q);
    default:
      return LatticeMessages(q);
  }
}

LabelField DenseCrf::ExactMessages(const MeanFieldState& q) const {
  const int n = image_.pixels();
  const int w = image_.width();
  const int labels = q.labels;
  const double smooth = 1.0 / (2.0 * params_.smooth_sigma * params_.smooth_sigma);
  const double app_xy =
      1.0 / (2.0 * params_.appearance_sigma_xy * params_.appearance_sigma_xy);
  const double app_rgb =
      1.0 / (2.0 * params_.appearance_sigma_rgb * params_.appearance_sigma_rgb);
  LabelField msg(labels, q.width, q.height);
  for (int i = 0; i < n; ++i) {
    const int xi = i % w;
    const int yi = i / w;
    const Rgb ci = image_.at(xi, yi);
    for (int j = i + 1; j < n; ++j) {
      const int xj = j % w;
      const int yj = j / w;
      const Rgb cj = image_.at(xj, yj);
      const double d2 = double(xi - xj) * (xi - xj) + double(yi - yj) * (yi - yj);
      double c2 = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        const double dc = double(ci[ch]) - double(cj[ch]);
        c2 += dc * dc;
      }
      const double k = params_.smooth_weight * std::exp(-d2 * smooth) +
                       params_.appearance_weight *
                           std::exp(-d2 * app_xy - c2 * app_rgb);
      for (int l = 0; l < labels; ++l) {
        msg.at(i, l) += k * q.at(j, l);
        msg.at(j, l) += k * q.at(i, l);
      }
    }
  }
  return msg;
}

void DenseCrf::AddSmoothMessages(const MeanFieldState& q, double sigmas,
                                 LabelField& msg) const {
  const int w = q.width;
  const int h = q.height;
  const int labels = q.labels;
  if (params_.smooth_weight > 0.0) {
    const int radius = static_cast<int>(std::ceil(sigmas * params_.smooth_sigma));
    std::vector<double> taps(2 * radius + 1);
    for (int d = -radius; d <= radius; ++d) {
      taps[d + radius] = std::exp(-double(d) * d /
                                  (2.0 * params_.smooth_sigma * params_.smooth_sigma));
    }
    std::vector<double> rows(q.values.size(), 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double* dst = &rows[(static_cast<std::size_t>(y) * w + x) * labels];
        for (int d = std::max(-radius, -x); d <= std::min(radius, w - 1 - x); ++d) {
          const double t = taps[d + radius];
          const auto src = q.pixel(y * w + x + d);
          for (int l = 0; l < labels; ++l) dst[l] += t * src[l];
        }
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int p = y * w + x;
        for (int d = std::max(-radius, -y); d <= std::min(radius, h - 1 - y); ++d) {
          const double t = taps[d + radius] * params_.smooth_weight;
          const double* src = &rows[(static_cast<std::size_t>(y + d) * w + x) * labels];
          for (int l = 0; l < labels; ++l) msg.at(p, l) += t * src[l];
        }
        for (int l = 0; l < labels; ++l) {
          msg.at(p, l) -= params_.smooth_weight * q.at(p, l);
        }
      }
    }
  }
}

LabelField DenseCrf::TruncatedMessages(const MeanFieldState& q) const {
  const int w = q.width;
  const int h = q.height;
  const int n = q.pixels();
  const int labels = q.labels;
  LabelField msg(labels, w, h);
  AddSmoothMessages(q, kTruncationSigmas, msg);
  if (params_.appearance_weight <= 0.0) return msg;

  const double sxy = params_.appearance_sigma_xy;
  const double srgb = params_.appearance_sigma_rgb;
  std::vector<double> gx(w), gy(h);
  for (int d = 0; d < w; ++d) gx[d] = std::exp(-double(d) * d / (2.0 * sxy * sxy));
  for (int d = 0; d < h; ++d) gy[d] = std::exp(-double(d) * d / (2.0 * sxy * sxy));
  // Squared color distances are integers, so the color factor is a table.
  const double cutoff = kTruncationSigmas * srgb;
  const int max_c2 = static_cast<int>(std::min(cutoff * cutoff, 3.0 * 255 * 255));
  std::vector<double> gc(max_c2 + 1);
  for (int c2 = 0; c2 <= max_c2; ++c2) {
    gc[c2] = params_.appearance_weight * std::exp(-c2 / (2.0 * srgb * srgb));
  }

  // Bucket pixels on a color grid whose cell side is the cutoff, so every
  // partner within the cutoff lies in one of the 27 neighboring cells. Pixel
  // data is laid out in bucket order to keep the pair loop contiguous.
  const int cell = std::max(1, static_cast<int>(std::ceil(cutoff)));
  const int side = 255 / cell + 1;
  const auto bucket_index = [&](const Rgb& c) {
    return (c[0] / cell * side + c[1] / cell) * side + c[2] / cell;
  };
  std::vector<int> start(static_cast<std::size_t>(side) * side * side + 1, 0);
  for (int p = 0; p < n; ++p) ++start[bucket_index(image_.at(p % w, p / w)) + 1];
  for (std::size_t b = 1; b < start.size(); ++b) start[b] += start[b - 1];
  std::vector<int> members(n);
  {
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (int p = 0; p < n; ++p) {
      members[fill[bucket_index(image_.at(p % w, p / w))]++] = p;
    }
  }
  struct Point {
    int x, y, r, g, b;
  };
  std::vector<Point> points(n);
  std::vector<double> qs(q.values.size());
  std::vector<double> acc(q.values.size(), 0.0);
  for (int m = 0; m < n; ++m) {
    const int p = members[m];
    const Rgb c = image_.at(p % w, p / w);
    points[m] = {p % w, p / w, c[0], c[1], c[2]};
    std::copy_n(&q.values[static_cast<std::size_t>(p) * labels], labels,
                &qs[static_cast<std::size_t>(m) * labels]);
  }

  const auto interact = [&](int m, int m2) {
    const Point& u = points[m];
    const Point& v = points[m2];
    const int c2 = (u.r - v.r) * (u.r - v.r) + (u.g - v.g) * (u.g - v.g) +
                   (u.b - v.b) * (u.b - v.b);
    if (c2 > max_c2) return;
    const double k = gc[c2] * gx[std::abs(u.x - v.x)] * gy[std::abs(u.y - v.y)];
    double* out_m = &acc[static_cast<std::size_t>(m) * labels];
    double* out_m2 = &acc[static_cast<std::size_t>(m2) * labels];
    const double* q_m = &qs[static_cast<std::size_t>(m) * labels];
    const double* q_m2 = &qs[static_cast<std::size_t>(m2) * labels];
    for (int l = 0; l < labels; ++l) {
      out_m[l] += k * q_m2[l];
      out_m2[l] += k * q_m[l];
    }
  };
  for (int br = 0; br < side; ++br) {
    for (int bg = 0; bg < side; ++bg) {
      for (int bb = 0; bb < side; ++bb) {
        const int a = (br * side + bg) * side + bb;
        for (int m = start[a]; m < start[a + 1]; ++m) {
          for (int m2 = m + 1; m2 < start[a + 1]; ++m2) interact(m, m2);
        }
        for (int r = br; r <= std::min(side - 1, br + 1); ++r) {
          for (int g = std::max(0, bg - 1); g <= std::min(side - 1, bg + 1); ++g) {
            for (int b = std::max(0, bb - 1); b <= std::min(side - 1, bb + 1); ++b) {
              const int other = (r * side + g) * side + b;
              if (other <= a) continue;
              for (int m = start[a]; m < start[a + 1]; ++m) {
                for (int m2 = start[other]; m2 < start[other + 1]; ++m2) {
                  interact(m, m2);
                }
              }
            }
          }
        }
      }
    }
  }
  for (int m = 0; m < n; ++m) {
    const double* src = &acc[static_cast<std::size_t>(m) * labels];
    double* dst = &msg.values[static_cast<std::size_t>(members[m]) * labels];
    for (int l = 0; l < labels; ++l) dst[l] += src[l];
  }
  return msg;
}

LabelField DenseCrf::LatticeMessages(const MeanFieldState& q) const {
  const int w = q.width;
  const int h = q.height;
  const int labels = q.labels;
  LabelField msg(labels, w, h);

  AddSmoothMessages(q, 4.0, msg);
  if (params_.appearance_weight > 0.0) {
    const std::vector<double> filtered =
        lattices_->appearance->Filter(q.values, labels);
    for (std::size_t i = 0; i < filtered.size(); ++i) {
      msg.values[i] +=
          params_.appearance_weight * (filtered[i] - q.values[i]);
    }
  }
  return msg;
}

MeanFieldState DenseCrf::Step(const UnaryField& unaries,
                              const MeanFieldState& q) const {
  CheckShape(unaries, "unary");
  if (unaries.labels != q.labels) {
    throw ContractError("unary and Q label counts differ");
  }
  const LabelField msg = PairwiseMessages(q);
  MeanFieldState next(q.labels, q.width, q.height);
  std::vector<double> energy(q.labels);
  for (int p = 0; p < q.pixels(); ++p) {
    double total = 0.0;
    for (int l = 0; l < q.labels; ++l) total += msg.at(p, l);
    double lowest = INFINITY;
    for (int l = 0; l < q.labels; ++l) {
      // Potts: label l pays for the mass every other label receives.
      energy[l] = unaries.at(p, l) + (total - msg.at(p, l));
      lowest = std::min(lowest, energy[l]);
    }
    double z = 0.0;
    for (int l = 0; l < q.labels; ++l) {
      energy[l] = std::exp(lowest - energy[l]);
      z += energy[l];
    }
    for (int l = 0; l < q.labels; ++l) next.at(p, l) = energy[l] / z;
  }
  return next;
}

MeanFieldState DenseCrf::Infer(const UnaryField& unaries) const {
  CheckShape(unaries, "unary");
  MeanFieldState q = Initialize(unaries);
  for (int it = 0; it < params_.iterations; ++it) q = Step(unaries, q);
  return q;
}

MeanFieldState DenseCrfMeanField(const UnaryField& unaries,
                                 const RgbImage& image,
                                 const CrfParams& params) {
  return DenseCrf(image, params).Infer(unaries);
}

}  // namespace salseg
