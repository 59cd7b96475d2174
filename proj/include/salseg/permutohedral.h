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

#ifndef SALSEG_PERMUTOHEDRAL_H_
#define SALSEG_PERMUTOHEDRAL_H_

#include <cstdint>
#include <span>
#include <vector>

namespace salseg {

// Approximate high-dimensional Gaussian filtering on the permutohedral
// lattice (Adams, Baek and Davis 2010). Features must already be divided by
// the kernel standard deviation, so the filter approximates
//   out_i = sum_j exp(-|f_i - f_j|^2 / 2) * in_j.
class PermutohedralLattice {
 public:
  // `features` holds `points` rows of `dims` values each.
  PermutohedralLattice(std::span<const double> features, int points, int dims);

  int points() const { return points_; }
  int dims() const { return dims_; }
  int vertices() const { return vertices_; }

  // `in` and the result hold `points` rows of `channels` values.
  std::vector<double> Filter(std::span<const double> in, int channels) const;

 private:
  struct Neighbors {
    int minus;
    int plus;
  };

  int points_;
  int dims_;
  int vertices_ = 0;
  // Per point, dims + 1 enclosing simplex vertices and their weights.
  std::vector<int> offsets_;
  std::vector<double> barycentric_;
  // Per blur axis and vertex; -1 marks a vertex absent from the lattice.
  std::vector<Neighbors> neighbors_;
};

}  // namespace salseg

#endif  // SALSEG_PERMUTOHEDRAL_H_
