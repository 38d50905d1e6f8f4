/* Copyright 2026 The spotsim Authors. All Rights Reserved.

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
#ifndef SPOTSIM_KM_MATCH_HPP_
#define SPOTSIM_KM_MATCH_HPP_

#include <vector>

namespace spotsim {

// Dense row-major non-negative weights; rows are left nodes.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}
  explicit WeightMatrix(const std::vector<std::vector<double>>& rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  std::vector<int> col_of_row;  // -1: row matched to a padding column
  double total_weight = 0.0;
};

// Maximum-weight bipartite matching (Kuhn-Munkres with potentials, O(n^3)).
// Rectangular inputs are padded with zero-weight dummy nodes. Deterministic:
// rows are inserted in index order and ties go to the lowest column.
Assignment km_match(const WeightMatrix& weights);

}  // namespace spotsim

#endif  // SPOTSIM_KM_MATCH_HPP_
