#include <cmath>
#include <limits>
#include <random>

#include "loggrouper/cluster.hpp"
#include "loggrouper/error.hpp"

namespace loggrouper {
namespace {

// Uniform [0, 1) from the raw engine output; std::uniform_real_distribution
// is implementation-defined and would break cross-platform reproducibility.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Matrix seed_plus_plus(const Matrix& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Matrix centers(k, x.cols());
  auto pick = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n));
  centers.row(0) = x.row(std::min(pick, n - 1));
  Vector closest(n);
  for (Eigen::Index i = 0; i < n; ++i) closest(i) = (x.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      const double r = uniform01(rng) * total;
      double cumulative = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (closest(i) <= 0.0) continue;
        cumulative += closest(i);
        chosen = i;
        if (cumulative > r) break;
      }
    } else {
      chosen = std::min(static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n)), n - 1);
    }
    centers.row(c) = x.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      closest(i) = std::min(closest(i), (x.row(i) - centers.row(c)).squaredNorm());
  }
  return centers;
}

struct LloydRun {
  std::vector<int> labels;
  Matrix centroids;
  double sse = 0.0;
  std::vector<double> trace;
  int repairs = 0;
};

LloydRun lloyd(const Matrix& x, Matrix centroids, const KMeansOptions& options) {
  const Eigen::Index n = x.rows();
  const auto k = static_cast<int>(centroids.rows());
  LloydRun run;
  run.labels.assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    std::vector<double> cost(static_cast<std::size_t>(n));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      run.labels[static_cast<std::size_t>(i)] = best;
      cost[static_cast<std::size_t>(i)] = best_d;
      ++counts[static_cast<std::size_t>(best)];
    }
    // Empty cluster: take over the point farthest from its centroid among
    // clusters that can spare one.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int l = run.labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(l)] < 2) continue;
        if (cost[static_cast<std::size_t>(i)] > far_d) {
          far_d = cost[static_cast<std::size_t>(i)];
          far = i;
        }
      }
      if (far < 0) break;
      --counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(far)])];
      run.labels[static_cast<std::size_t>(far)] = c;
      cost[static_cast<std::size_t>(far)] = 0.0;
      ++counts[static_cast<std::size_t>(c)];
      ++run.repairs;
    }

    Matrix next = Matrix::Zero(k, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) next.row(run.labels[static_cast<std::size_t>(i)]) += x.row(i);
    for (int c = 0; c < k; ++c)
      next.row(c) = counts[static_cast<std::size_t>(c)] > 0
                        ? Eigen::RowVectorXd(next.row(c) / counts[static_cast<std::size_t>(c)])
                        : Eigen::RowVectorXd(centroids.row(c));

    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      sse += (x.row(i) - next.row(run.labels[static_cast<std::size_t>(i)])).squaredNorm();
    run.trace.push_back(sse);

    double shift = 0.0;
    for (int c = 0; c < k; ++c) shift = std::max(shift, (next.row(c) - centroids.row(c)).norm());
    centroids = std::move(next);
    run.sse = sse;
    if (shift < options.tolerance) break;
  }
  run.centroids = std::move(centroids);
  return run;
}

// Single-point transfers (Hartigan) after Lloyd has converged. Lloyd stops
// at any partition whose points sit nearest their own centroid; a transfer
// also accounts for how both centroids move, which escapes many of those
// local optima. Every accepted move strictly lowers the SSE.
void refine_transfers(const Matrix& x, LloydRun& run, const KMeansOptions& options) {
  const Eigen::Index n = x.rows();
  const auto k = static_cast<int>(run.centroids.rows());
  if (k < 2) return;
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : run.labels) ++counts[static_cast<std::size_t>(l)];
  Matrix sums = Matrix::Zero(k, x.cols());
  for (Eigen::Index i = 0; i < n; ++i) sums.row(run.labels[static_cast<std::size_t>(i)]) += x.row(i);

  const double scale = std::max(1.0, run.sse);
  for (int sweep = 0; sweep < options.max_iterations; ++sweep) {
    bool moved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = run.labels[static_cast<std::size_t>(i)];
      const int na = counts[static_cast<std::size_t>(a)];
      if (na < 2) continue;
      const double removal = na / (na - 1.0) * (x.row(i) - sums.row(a) / na).squaredNorm();
      int best = a;
      double best_delta = -1e-12 * scale;
      for (int b = 0; b < k; ++b) {
        if (b == a) continue;
        const int nb = counts[static_cast<std::size_t>(b)];
        const double addition =
            nb == 0 ? 0.0 : nb / (nb + 1.0) * (x.row(i) - sums.row(b) / nb).squaredNorm();
        if (addition - removal < best_delta) {
          best_delta = addition - removal;
          best = b;
        }
      }
      if (best == a) continue;
      sums.row(a) -= x.row(i);
      sums.row(best) += x.row(i);
      --counts[static_cast<std::size_t>(a)];
      ++counts[static_cast<std::size_t>(best)];
      run.labels[static_cast<std::size_t>(i)] = best;
      moved = true;
    }
    if (!moved) break;
    double sse = 0.0;
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0) run.centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
    for (Eigen::Index i = 0; i < n; ++i)
      sse += (x.row(i) - run.centroids.row(run.labels[static_cast<std::size_t>(i)])).squaredNorm();
    run.trace.push_back(sse);
    run.sse = sse;
  }
}

}  // namespace

KMeansResult kmeans_detailed(const Matrix& points, int k, std::uint64_t seed,
                             const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > n)
    throw Error(ErrorCode::InvalidArgument,
                "k=" + std::to_string(k) + " exceeds the number of points (" +
                    std::to_string(n) + ")");
  std::mt19937_64 rng(seed);
  LloydRun best;
  bool have_best = false;
  const int restarts = std::max(1, options.restarts);
  for (int r = 0; r < restarts; ++r) {
    LloydRun run = lloyd(points, seed_plus_plus(points, k, rng), options);
    refine_transfers(points, run, options);
    if (!have_best || run.sse < best.sse) {
      best = std::move(run);
      have_best = true;
    }
  }

  KMeansResult result;
  std::vector<int> labels = best.labels;
  const int effective = canonicalize_labels(labels);
  // Reorder centroids to follow the canonical labels.
  result.centroids.resize(k, points.cols());
  std::vector<bool> placed(static_cast<std::size_t>(k), false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (placed[static_cast<std::size_t>(labels[i])]) continue;
    result.centroids.row(labels[i]) = best.centroids.row(best.labels[i]);
    placed[static_cast<std::size_t>(labels[i])] = true;
  }
  result.assignment.labels = std::move(labels);
  result.assignment.k = effective;
  result.assignment.algorithm = Algorithm::KMeans;
  result.assignment.seed = seed;
  result.assignment.params["k"] = k;
  result.assignment.params["sse"] = best.sse;
  result.sse = best.sse;
  result.sse_trace = std::move(best.trace);
  result.empty_repairs = best.repairs;
  return result;
}

ClusterAssignment kmeans(const FeatureMatrix& matrix, int k, std::uint64_t seed,
                         const KMeansOptions& options) {
  auto result = kmeans_detailed(matrix.rows, k, seed, options);
  result.assignment.record_ids = matrix.record_ids;
  return std::move(result.assignment);
}

}  // namespace loggrouper
