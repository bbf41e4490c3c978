#include <algorithm>
#include <cmath>
#include <limits>

#include "cluster_internal.hpp"
#include "loggrouper/error.hpp"
#include "loggrouper/quality.hpp"

namespace loggrouper {

int find_elbow(const std::vector<int>& ks, const std::vector<double>& values) {
  if (ks.size() != values.size())
    throw Error(ErrorCode::InvalidArgument, "elbow curve needs one value per k");
  if (ks.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "elbow detection needs at least three k values");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1]) throw Error(ErrorCode::InvalidArgument, "k values must ascend");

  const double x0 = ks.front();
  const double x_span = ks.back() - x0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double y_span = *hi - *lo;
  auto nx = [&](std::size_t i) { return (ks[i] - x0) / x_span; };
  auto ny = [&](std::size_t i) { return y_span > 0.0 ? (values[i] - *lo) / y_span : 0.0; };

  // Chord from (0, y_first) to (1, y_last): distance of (x, y) is
  // |(y_last - y_first) x - y + y_first| / sqrt(1 + (y_last - y_first)^2).
  const double y_first = ny(0);
  const double slope = ny(ks.size() - 1) - y_first;
  const double denom = std::sqrt(1.0 + slope * slope);
  int chosen = ks[1];
  double best = -1.0;
  for (std::size_t i = 1; i + 1 < ks.size(); ++i) {
    const double dist = std::abs(slope * nx(i) - ny(i) + y_first) / denom;
    if (dist > best) {
      best = dist;
      chosen = ks[i];
    }
  }
  return chosen;
}

ElbowResult elbow_select_k(const FeatureMatrix& matrix, const std::vector<int>& k_range,
                           Algorithm clusterer, std::uint64_t seed, Linkage linkage) {
  const Eigen::Index n = matrix.size();
  std::vector<int> ks = k_range;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "elbow detection needs at least three k values");
  if (ks.front() < 2 || ks.back() > n)
    throw Error(ErrorCode::InvalidArgument,
                "k range must lie within [2, " + std::to_string(n) + "]");

  std::map<int, std::vector<int>> labels_by_k;
  switch (clusterer) {
    case Algorithm::KMeans:
      for (int k : ks) labels_by_k[k] = kmeans(matrix, k, seed).labels;
      break;
    case Algorithm::Agglomerative:
      labels_by_k = detail::agglomerative_cuts(matrix.rows, ks, linkage);
      break;
    case Algorithm::Spectral: {
      const auto basis = detail::spectral_basis(detail::rbf_affinity(matrix.rows));
      for (int k : ks) labels_by_k[k] = detail::spectral_labels(basis, k, seed);
      break;
    }
    case Algorithm::DBSCAN:
      throw Error(ErrorCode::InvalidArgument, "the elbow method does not apply to DBSCAN");
  }

  ElbowResult result;
  result.curve.ks = ks;
  for (int k : ks) result.curve.values.push_back(within_cluster_sse(matrix.rows, labels_by_k[k]));
  result.curve.chosen_k = find_elbow(ks, result.curve.values);

  auto& a = result.assignment;
  a.record_ids = matrix.record_ids;
  a.labels = std::move(labels_by_k[result.curve.chosen_k]);
  a.k = canonicalize_labels(a.labels);
  a.algorithm = clusterer;
  a.seed = clusterer == Algorithm::Agglomerative ? 0 : seed;
  a.params["k"] = result.curve.chosen_k;
  a.params["sse"] = within_cluster_sse(matrix.rows, a.labels);
  return result;
}

std::vector<double> k_distances(const Matrix& points, int min_samples) {
  const Eigen::Index n = points.rows();
  const int neighbour = std::max(1, min_samples - 1);
  if (neighbour >= n)
    throw Error(ErrorCode::InvalidArgument,
                "need more than " + std::to_string(neighbour) + " points for k-distances");
  const Matrix dist = pairwise_distances(points);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  std::vector<double> row;
  for (Eigen::Index i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) row.push_back(dist(i, j));
    std::nth_element(row.begin(), row.begin() + (neighbour - 1), row.end());
    out.push_back(row[static_cast<std::size_t>(neighbour - 1)]);
  }
  return out;
}

double greedy_eps(const FeatureMatrix& matrix, int min_samples) {
  const Eigen::Index n = matrix.size();
  if (min_samples < 1) throw Error(ErrorCode::InvalidArgument, "min_samples must be >= 1");
  if (n < min_samples + 1)
    throw Error(ErrorCode::InvalidArgument,
                "greedy eps search needs at least min_samples + 1 points");
  std::vector<double> kd = k_distances(matrix.rows, min_samples);
  std::sort(kd.begin(), kd.end());

  std::vector<double> candidates;
  for (int decile = 1; decile <= 9; ++decile) {
    const double pos = decile / 10.0 * static_cast<double>(kd.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, kd.size() - 1);
    const double v = kd[lo] + (pos - static_cast<double>(lo)) * (kd[hi] - kd[lo]);
    if (v > 0.0) candidates.push_back(v);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  double best_eps = 0.0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (double eps : candidates) {
    const auto labels = dbscan_labels(matrix.rows, eps, min_samples);
    const auto noise = std::count(labels.begin(), labels.end(), kNoise);
    const int clusters = *std::max_element(labels.begin(), labels.end()) + 1;
    if (clusters < 2 || static_cast<double>(noise) > 0.5 * static_cast<double>(n)) continue;
    double score;
    try {
      score = silhouette(matrix.rows, labels);
    } catch (const Error&) {
      continue;
    }
    if (score > best_score) {
      best_score = score;
      best_eps = eps;
    }
  }
  if (!(best_eps > 0.0))
    throw Error(ErrorCode::Degenerate, "no viable epsilon: no candidate yields two clusters");
  return best_eps;
}

}  // namespace loggrouper
