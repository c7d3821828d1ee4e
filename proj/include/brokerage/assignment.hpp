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

#ifndef BROKERAGE_ASSIGNMENT_HPP_
#define BROKERAGE_ASSIGNMENT_HPP_

#include <vector>

namespace brokerage {

struct AssignmentResult {
  std::vector<int> column_of_row;  // every row is assigned
  std::vector<double> row_potential;
  std::vector<double> column_potential;  // <= 0; 0 for unassigned columns
  double cost = 0.0;
};

// Min-cost assignment of every row to a distinct column (rows <= columns)
// by shortest augmenting paths with potentials. Entries equal to +infinity
// are forbidden arcs; every row needs a finite one. Potentials satisfy
// u_i + v_j <= c_ij with equality on assigned arcs.
AssignmentResult solve_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace brokerage

#endif  // BROKERAGE_ASSIGNMENT_HPP_
