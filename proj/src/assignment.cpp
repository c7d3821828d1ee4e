// Copyright 2026 The Brokerage Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "brokerage/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace brokerage {

AssignmentResult solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  AssignmentResult r;
  if (n == 0) return r;
  const int m = static_cast<int>(cost[0].size());
  if (m < n) throw std::invalid_argument("assignment needs at least as many columns as rows");
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != m) throw std::invalid_argument("ragged cost matrix");
    bool finite = false;
    for (double c : row) {
      if (std::isnan(c) || c == -std::numeric_limits<double>::infinity()) {
        throw std::invalid_argument("cost entries must be finite or +infinity");
      }
      finite = finite || std::isfinite(c);
    }
    if (!finite) throw std::invalid_argument("row without a permitted column");
  }
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0, as in the classical O(n^2 m) scheme.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (delta == inf) throw std::invalid_argument("no feasible complete assignment");
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  r.column_of_row.assign(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) r.column_of_row[p[j] - 1] = j - 1;
  }
  r.row_potential.assign(u.begin() + 1, u.end());
  r.column_potential.assign(v.begin() + 1, v.end());
  for (int i = 0; i < n; ++i) r.cost += cost[i][r.column_of_row[i]];
  return r;
}

}  // namespace brokerage
