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

#include "salseg/permutohedral.h"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "salseg/error.h"

namespace salseg {
namespace {

// Open-addressing map from integer lattice keys (dims coordinates; the last
// coordinate of an elevated point is implied by the zero-sum constraint) to
// dense vertex ids.
class KeyTable {
 public:
  KeyTable(int key_size, std::size_t expected)
      : key_size_(key_size), slots_(Capacity(expected), -1) {}

  int size() const { return static_cast<int>(keys_.size() / key_size_); }
  const std::int32_t* key(int id) const { return &keys_[id * key_size_]; }

  int Find(const std::int32_t* key) const {
    std::size_t h = Hash(key) & (slots_.size() - 1);
    while (true) {
      const int id = slots_[h];
      if (id < 0) return -1;
      if (Equal(id, key)) return id;
      h = (h + 1) & (slots_.size() - 1);
    }
  }

  int Insert(const std::int32_t* key) {
    if (2 * (size() + 1) > static_cast<int>(slots_.size())) Grow();
    std::size_t h = Hash(key) & (slots_.size() - 1);
    while (true) {
      const int id = slots_[h];
      if (id < 0) {
        keys_.insert(keys_.end(), key, key + key_size_);
        slots_[h] = size() - 1;
        return slots_[h];
      }
      if (Equal(id, key)) return id;
      h = (h + 1) & (slots_.size() - 1);
    }
  }

 private:
  static std::size_t Capacity(std::size_t expected) {
    std::size_t c = 64;
    while (c < 2 * expected) c <<= 1;
    return c;
  }
  std::size_t Hash(const std::int32_t* key) const {
    std::size_t h = 0;
    for (int i = 0; i < key_size_; ++i) {
      h += static_cast<std::size_t>(key[i]);
      h *= 1664525u;
      h ^= h >> 15;
    }
    return h;
  }
  bool Equal(int id, const std::int32_t* key) const {
    const std::int32_t* stored = &keys_[id * key_size_];
    for (int i = 0; i < key_size_; ++i) {
      if (stored[i] != key[i]) return false;
    }
    return true;
  }
  void Grow() {
    std::vector<int> slots(slots_.size() * 2, -1);
    for (int id = 0; id < size(); ++id) {
      std::size_t h = Hash(key(id)) & (slots.size() - 1);
      while (slots[h] >= 0) h = (h + 1) & (slots.size() - 1);
      slots[h] = id;
    }
    slots_.swap(slots);
  }

  int key_size_;
  std::vector<int> slots_;
  std::vector<std::int32_t> keys_;
};

}  // namespace

PermutohedralLattice::PermutohedralLattice(std::span<const double> features,
                                           int points, int dims)
    : points_(points), dims_(dims) {
  if (points < 1 || dims < 1) {
    throw ContractError("lattice needs at least one point and one dimension");
  }
  if (features.size() != static_cast<std::size_t>(points) * dims) {
    throw ContractError("lattice feature buffer has the wrong size");
  }
  const int d = dims;
  const int d1 = d + 1;
  KeyTable table(d, static_cast<std::size_t>(points) * d1);
  offsets_.resize(static_cast<std::size_t>(points) * d1);
  barycentric_.resize(static_cast<std::size_t>(points) * d1);

  // Standard deviation of the lattice blur, folded into the elevation.
  const double inv_std_dev = std::sqrt(2.0 / 3.0) * d1;
  std::vector<double> scale(d);
  for (int i = 0; i < d; ++i) {
    scale[i] = inv_std_dev / std::sqrt(static_cast<double>((i + 1) * (i + 2)));
  }
  // canonical[r * d1 + j]: coordinate j of the remainder-r simplex vertex.
  std::vector<int> canonical(static_cast<std::size_t>(d1) * d1);
  for (int r = 0; r <= d; ++r) {
    for (int j = 0; j <= d - r; ++j) canonical[r * d1 + j] = r;
    for (int j = d - r + 1; j <= d; ++j) canonical[r * d1 + j] = r - d1;
  }

  std::vector<double> elevated(d1), bary(d + 2);
  std::vector<int> rem0(d1), rank(d1);
  std::vector<std::int32_t> key(d);
  for (int n = 0; n < points; ++n) {
    const double* f = &features[static_cast<std::size_t>(n) * d];
    // Project onto the plane sum(x) = 0 in d + 1 dimensions.
    double sm = 0.0;
    for (int j = d; j > 0; --j) {
      const double cf = f[j - 1] * scale[j - 1];
      elevated[j] = sm - j * cf;
      sm += cf;
    }
    elevated[0] = sm;

    // Nearest remainder-0 point.
    int sum = 0;
    for (int i = 0; i <= d; ++i) {
      const double v = elevated[i] / d1;
      const double up = std::ceil(v) * d1;
      const double down = std::floor(v) * d1;
      rem0[i] = static_cast<int>(up - elevated[i] < elevated[i] - down ? up
                                                                       : down);
      sum += rem0[i] / d1;
    }

    // Rank the differential to find the enclosing simplex.
    std::fill(rank.begin(), rank.end(), 0);
    for (int i = 0; i < d; ++i) {
      const double di = elevated[i] - rem0[i];
      for (int j = i + 1; j <= d; ++j) {
        if (di < elevated[j] - rem0[j]) {
          ++rank[i];
        } else {
          ++rank[j];
        }
      }
    }
    // Bring the remainder-0 point back onto the plane if rounding left it off.
    for (int i = 0; i <= d; ++i) {
      rank[i] += sum;
      if (rank[i] < 0) {
        rank[i] += d1;
        rem0[i] += d1;
      } else if (rank[i] > d) {
        rank[i] -= d1;
        rem0[i] -= d1;
      }
    }

    std::fill(bary.begin(), bary.end(), 0.0);
    for (int i = 0; i <= d; ++i) {
      const double v = (elevated[i] - rem0[i]) / d1;
      bary[d - rank[i]] += v;
      bary[d - rank[i] + 1] -= v;
    }
    bary[0] += 1.0 + bary[d + 1];

    for (int r = 0; r <= d; ++r) {
      for (int i = 0; i < d; ++i) key[i] = rem0[i] + canonical[r * d1 + rank[i]];
      offsets_[static_cast<std::size_t>(n) * d1 + r] = table.Insert(key.data());
      barycentric_[static_cast<std::size_t>(n) * d1 + r] = bary[r];
    }
  }

  vertices_ = table.size();
  neighbors_.resize(static_cast<std::size_t>(d1) * vertices_);
  std::vector<std::int32_t> minus(d), plus(d);
  for (int axis = 0; axis <= d; ++axis) {
    for (int v = 0; v < vertices_; ++v) {
      const std::int32_t* k = table.key(v);
      for (int i = 0; i < d; ++i) {
        minus[i] = k[i] - 1;
        plus[i] = k[i] + 1;
      }
      if (axis < d) {
        minus[axis] = k[axis] + d;
        plus[axis] = k[axis] - d;
      }
      neighbors_[static_cast<std::size_t>(axis) * vertices_ + v] = {
          table.Find(minus.data()), table.Find(plus.data())};
    }
  }
}

std::vector<double> PermutohedralLattice::Filter(std::span<const double> in,
                                                 int channels) const {
  if (in.size() != static_cast<std::size_t>(points_) * channels) {
    throw ContractError("lattice filter input has the wrong size");
  }
  const int d1 = dims_ + 1;
  const std::size_t c = static_cast<std::size_t>(channels);
  std::vector<double> values(static_cast<std::size_t>(vertices_) * c, 0.0);
  std::vector<double> scratch(values.size());

  for (int n = 0; n < points_; ++n) {
    for (int r = 0; r < d1; ++r) {
      const std::size_t slot = static_cast<std::size_t>(n) * d1 + r;
      const double w = barycentric_[slot];
      double* dst = &values[offsets_[slot] * c];
      const double* src = &in[n * c];
      for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += w * src[ch];
    }
  }

  for (int axis = 0; axis < d1; ++axis) {
    for (int v = 0; v < vertices_; ++v) {
      const Neighbors nb =
          neighbors_[static_cast<std::size_t>(axis) * vertices_ + v];
      const double* self = &values[v * c];
      double* out = &scratch[v * c];
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = self[ch];
        if (nb.minus >= 0) acc += 0.5 * values[nb.minus * c + ch];
        if (nb.plus >= 0) acc += 0.5 * values[nb.plus * c + ch];
        out[ch] = acc;
      }
    }
    values.swap(scratch);
  }

  // Gain correction for the [1 2 1] / 2 blur applied along d + 1 axes.
  const double alpha = 1.0 / (1.0 + std::pow(2.0, -dims_));
  std::vector<double> out(static_cast<std::size_t>(points_) * c, 0.0);
  for (int n = 0; n < points_; ++n) {
    double* dst = &out[n * c];
    for (int r = 0; r < d1; ++r) {
      const std::size_t slot = static_cast<std::size_t>(n) * d1 + r;
      const double w = barycentric_[slot] * alpha;
      const double* src = &values[offsets_[slot] * c];
      for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += w * src[ch];
    }
  }
  return out;
}

}  // namespace salseg
