#pragma once

#include <vector>

namespace mvbev {

/// Rectangular assignment with gating. `cost[i][j]` is used only where
/// `admissible[i][j]`; the result first maximizes the number of admissible pairs,
/// then minimizes their total cost. Returns, per row, the assigned column or -1.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost,
                                  const std::vector<std::vector<bool>>& admissible);

}  // namespace mvbev
