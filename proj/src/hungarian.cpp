#include "mvbev/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvbev/error.hpp"

namespace mvbev {

std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost,
                                  const std::vector<std::vector<bool>>& admissible) {
  const int rows = static_cast<int>(cost.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(cost.front().size());
  if (static_cast<int>(admissible.size()) != rows) {
    throw Error(ErrorCode::LengthMismatch, "assignment: cost and mask row counts differ");
  }
  std::vector<int> result(rows, -1);
  if (rows == 0 || cols == 0) return result;

  double max_cost = 0.0;
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(cost[i].size()) != cols || static_cast<int>(admissible[i].size()) != cols) {
      throw Error(ErrorCode::LengthMismatch, "assignment: ragged cost matrix");
    }
    for (int j = 0; j < cols; ++j) {
      if (admissible[i][j]) max_cost = std::max(max_cost, std::abs(cost[i][j]));
    }
  }
  // A forbidden (or dummy) cell costs more than any full set of real pairs, so
  // the optimum maximizes the admissible count before it minimizes cost.
  const int n = std::max(rows, cols);
  const double big = (max_cost + 1.0) * (n + 1);
  auto at = [&](int i, int j) {
    if (i < rows && j < cols && admissible[i][j]) return cost[i][j];
    return big;
  };

  // Shortest augmenting path with potentials (1-based, column 0 is the sentinel).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match_col(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match_col[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match_col[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
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
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const int j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (int j = 1; j <= n; ++j) {
    const int i = match_col[j] - 1;
    const int c = j - 1;
    if (i < rows && c < cols && admissible[i][c]) result[i] = c;
  }
  return result;
}

}  // namespace mvbev
