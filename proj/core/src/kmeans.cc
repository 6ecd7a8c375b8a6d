#include "maskcontrast/kmeans.h"

#include <limits>
#include <string>

#include "maskcontrast/rng.h"

MC_NAMESPACE_BEGIN

namespace {

double sq_dist(const Real* a, const double* b, std::int64_t d) {
  double s = 0;
  for (std::int64_t c = 0; c < d; ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return s;
}

}  // namespace

double kmeans_objective(const Tensor& points, const Tensor& centroids, const std::vector<int>& assignments) {
  const std::int64_t d = points.dim(1);
  double total = 0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const Real* p = points.data() + static_cast<std::int64_t>(i) * d;
    const Real* c = centroids.data() + assignments[i] * d;
    for (std::int64_t j = 0; j < d; ++j) {
      const double diff = static_cast<double>(p[j]) - c[j];
      total += diff * diff;
    }
  }
  return total;
}

KMeansResult kmeans(const Tensor& points, int k, int max_iter, std::uint64_t seed) {
  if (points.rank() != 2) throw ShapeError("kmeans expects points [M,D], got " + shape_string(points.shape()));
  const std::int64_t m = points.dim(0), d = points.dim(1);
  if (k < 1 || k > m) {
    throw DataError("kmeans: k = " + std::to_string(k) + " needs 1 <= k <= number of points (" + std::to_string(m) + ")");
  }
  if (max_iter < 1) throw DataError("kmeans: max_iter must be >= 1");
  const auto ku = static_cast<std::size_t>(k);
  const auto du = static_cast<std::size_t>(d);
  auto point = [&](std::int64_t i) { return points.data() + i * d; };

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<double> cent(ku * du);
  std::vector<double> best(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
  auto place = [&](std::size_t c, std::int64_t i) {
    for (std::size_t j = 0; j < du; ++j) cent[c * du + j] = point(i)[j];
  };
  place(0, static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m))));
  for (std::size_t c = 1; c < ku; ++c) {
    double total = 0;
    for (std::int64_t i = 0; i < m; ++i) {
      auto& b = best[static_cast<std::size_t>(i)];
      b = std::min(b, sq_dist(point(i), &cent[(c - 1) * du], d));
      total += b;
    }
    std::int64_t pick = m - 1;
    if (total > 0) {
      double r = rng.uniform() * total;
      for (std::int64_t i = 0; i < m; ++i) {
        r -= best[static_cast<std::size_t>(i)];
        if (r < 0 && best[static_cast<std::size_t>(i)] > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m)));
    }
    place(c, pick);
  }

  KMeansResult res;
  res.assignments.assign(static_cast<std::size_t>(m), -1);
  std::vector<double> dist(static_cast<std::size_t>(m));
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    double obj = 0;
    for (std::int64_t i = 0; i < m; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      int arg = res.assignments[iu];
      double dmin = arg >= 0 ? sq_dist(point(i), &cent[static_cast<std::size_t>(arg) * du], d)
                             : std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < ku; ++c) {
        const double dc = sq_dist(point(i), &cent[c * du], d);
        if (dc < dmin) {
          dmin = dc;
          arg = static_cast<int>(c);
        }
      }
      changed |= arg != res.assignments[iu];
      res.assignments[iu] = arg;
      dist[iu] = dmin;
      obj += dmin;
    }
    res.history.push_back(obj);
    res.iterations = it + 1;
    if (!changed && it > 0) break;

    std::vector<double> sum(ku * du, 0.0);
    std::vector<std::int64_t> count(ku, 0);
    for (std::int64_t i = 0; i < m; ++i) {
      const auto c = static_cast<std::size_t>(res.assignments[static_cast<std::size_t>(i)]);
      ++count[c];
      for (std::size_t j = 0; j < du; ++j) sum[c * du + j] += point(i)[j];
    }
    for (std::size_t c = 0; c < ku; ++c) {
      if (count[c] > 0) {
        for (std::size_t j = 0; j < du; ++j) cent[c * du + j] = sum[c * du + j] / static_cast<double>(count[c]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point, which then
      // becomes its own cluster on the next assignment.
      std::size_t far = 0;
      for (std::size_t i = 1; i < dist.size(); ++i)
        if (dist[i] > dist[far]) far = i;
      place(c, static_cast<std::int64_t>(far));
      dist[far] = 0;
    }
  }

  res.centroids = Tensor(Shape{k, d});
  for (std::size_t i = 0; i < cent.size(); ++i) res.centroids[i] = static_cast<Real>(cent[i]);
  res.objective = kmeans_objective(points, res.centroids, res.assignments);
  return res;
}

KMeansResult kmeans_best_of(const Tensor& points, int k, int max_iter, std::uint64_t seed, int restarts) {
  if (restarts < 1) throw DataError("kmeans: restarts must be >= 1");
  KMeansResult best;
  for (int r = 0; r < restarts; ++r) {
    KMeansResult cur = kmeans(points, k, max_iter, derive_seed(seed, static_cast<std::uint64_t>(r)));
    if (r == 0 || cur.objective < best.objective) best = std::move(cur);
  }
  return best;
}

MC_NAMESPACE_END
