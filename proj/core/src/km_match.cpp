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
#include "spotsim/km_match.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace spotsim {

WeightMatrix::WeightMatrix(const std::vector<std::vector<double>>& rows)
    : rows_(static_cast<int>(rows.size())), cols_(rows.empty() ? 0 : static_cast<int>(rows[0].size())) {
  data_.reserve(static_cast<std::size_t>(rows_) * cols_);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols_) throw std::invalid_argument("ragged weight matrix");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Assignment km_match(const WeightMatrix& weights) {
  Assignment out;
  const int rows = weights.rows();
  const int cols = weights.cols();
  out.col_of_row.assign(rows, -1);
  if (rows == 0 || cols == 0) return out;

  const int n = std::max(rows, cols);
  auto cost = [&](int r, int c) {
    return (r < rows && c < cols) ? -weights.at(r, c) : 0.0;
  };

  // Shortest augmenting path formulation, 1-based with a virtual column 0.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> row_of_col(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = row_of_col[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const int j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (int j = 1; j <= n; ++j) {
    const int r = row_of_col[j] - 1;
    const int c = j - 1;
    if (r < rows && c < cols) {
      out.col_of_row[r] = c;
      out.total_weight += weights.at(r, c);
    }
  }
  return out;
}

}  // namespace spotsim
