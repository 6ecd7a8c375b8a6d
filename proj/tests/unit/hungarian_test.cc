#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "maskcontrast/hungarian.h"
#include "maskcontrast/rng.h"

using namespace mc;

namespace {

double brute_force(const std::vector<std::vector<double>>& c) {
  std::vector<int> perm(c.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0;
    for (std::size_t i = 0; i < c.size(); ++i) s += c[i][static_cast<std::size_t>(perm[i])];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST(Hungarian, MatchesBruteForceOnSmallMatrices) {
  Rng rng(17);
  for (int n = 1; n <= 6; ++n)
    for (int t = 0; t < 20; ++t) {
      std::vector<std::vector<double>> c(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
      for (auto& row : c)
        for (double& v : row) v = static_cast<double>(rng.below(20)) - 5;  // integer costs, ties likely
      const Assignment a = hungarian(c);
      double s = 0;
      for (int i = 0; i < n; ++i) s += c[static_cast<std::size_t>(i)][static_cast<std::size_t>(a.row_to_col[static_cast<std::size_t>(i)])];
      ASSERT_EQ(s, a.cost);
      ASSERT_EQ(a.cost, brute_force(c)) << "n=" << n << " trial " << t;
    }
}

TEST(Hungarian, ResultIsPermutation) {
  Rng rng(3);
  std::vector<std::vector<double>> c(9, std::vector<double>(9));
  for (auto& row : c)
    for (double& v : row) v = rng.uniform(-1, 1);
  const Assignment a = hungarian(c);
  EXPECT_EQ(std::set<int>(a.row_to_col.begin(), a.row_to_col.end()).size(), 9u);
}

TEST(Hungarian, KnownCase) {
  const std::vector<std::vector<double>> c{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  const Assignment a = hungarian(c);
  EXPECT_EQ(a.cost, 5);
  EXPECT_EQ(a.row_to_col, (std::vector<int>{1, 0, 2}));
}

TEST(Hungarian, RejectsBadInput) {
  EXPECT_THROW(hungarian({{1, 2}, {3}}), DataError);
  EXPECT_THROW(hungarian({{1, std::numeric_limits<double>::infinity()}, {0, 0}}), DataError);
  EXPECT_TRUE(hungarian({}).row_to_col.empty());
}
