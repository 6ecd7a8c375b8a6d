#include "maskcontrast/hungarian.h"

#include <cmath>
#include <limits>
#include <string>

MC_NAMESPACE_BEGIN

Assignment hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cost[i].size() != n) {
      throw DataError("hungarian: cost matrix is not square (row " + std::to_string(i) + " has " +
                      std::to_string(cost[i].size()) + " entries, expected " + std::to_string(n) + ")");
    }
    for (double c : cost[i])
      if (!std::isfinite(c)) throw DataError("hungarian: non-finite cost in row " + std::to_string(i));
  }
  Assignment out;
  if (n == 0) return out;

  // 1-based arrays; column 0 is the virtual source of each augmenting path.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.row_to_col.assign(n, -1);
  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t i = 0; i < n; ++i) out.cost += cost[i][static_cast<std::size_t>(out.row_to_col[i])];
  return out;
}

MC_NAMESPACE_END
