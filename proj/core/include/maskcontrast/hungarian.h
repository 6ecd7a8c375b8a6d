#pragma once

#include <vector>

#include "maskcontrast/common.h"

MC_NAMESPACE_BEGIN

struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0;
};

/// Exact minimum-cost perfect matching of a square cost matrix (rows of equal
/// length n). O(n^3) shortest augmenting paths with potentials. Non-square or
/// non-finite input throws DataError.
Assignment hungarian(const std::vector<std::vector<double>>& cost);

MC_NAMESPACE_END
