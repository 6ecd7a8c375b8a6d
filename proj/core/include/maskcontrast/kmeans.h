#pragma once

#include <cstdint>
#include <vector>

#include "maskcontrast/tensor.h"

MC_NAMESPACE_BEGIN

struct KMeansResult {
  Tensor centroids;              // [k,D]
  std::vector<int> assignments;  // one per point
  double objective = 0;          // sum of squared distances to assigned centroid
  /// Objective after every assignment step, in order.
  std::vector<double> history;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding on the rows of `points` [M,D].
/// Stops at an assignment fixpoint or after max_iter iterations. A cluster
/// that loses all its points is re-seeded at the point farthest from its
/// centroid.
KMeansResult kmeans(const Tensor& points, int k, int max_iter, std::uint64_t seed);
/// Lowest-objective result of `restarts` seeded runs.
KMeansResult kmeans_best_of(const Tensor& points, int k, int max_iter, std::uint64_t seed, int restarts);

double kmeans_objective(const Tensor& points, const Tensor& centroids, const std::vector<int>& assignments);

MC_NAMESPACE_END
