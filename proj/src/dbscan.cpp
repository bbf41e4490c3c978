#include <deque>

#include "loggrouper/cluster.hpp"
#include "loggrouper/error.hpp"

namespace loggrouper {

std::vector<int> dbscan_labels(const Matrix& points, double eps, int min_samples) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (min_samples < 1) throw Error(ErrorCode::InvalidArgument, "min_samples must be >= 1");
  const Eigen::Index n = points.rows();
  const Matrix dist = pairwise_distances(points);

  // Closed-ball neighbourhoods, each point counting itself.
  std::vector<std::vector<Eigen::Index>> neighbours(static_cast<std::size_t>(n));
  std::vector<bool> core(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      if (dist(i, j) <= eps) neighbours[static_cast<std::size_t>(i)].push_back(j);
    core[static_cast<std::size_t>(i)] =
        static_cast<int>(neighbours[static_cast<std::size_t>(i)].size()) >= min_samples;
  }

  constexpr int kUnassigned = -2;
  std::vector<int> labels(static_cast<std::size_t>(n), kUnassigned);
  // Clusters are connected components of core points, numbered by their
  // lowest index.
  int next = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!core[static_cast<std::size_t>(i)] || labels[static_cast<std::size_t>(i)] != kUnassigned)
      continue;
    const int cluster = next++;
    labels[static_cast<std::size_t>(i)] = cluster;
    std::deque<Eigen::Index> frontier{i};
    while (!frontier.empty()) {
      const Eigen::Index p = frontier.front();
      frontier.pop_front();
      for (Eigen::Index q : neighbours[static_cast<std::size_t>(p)]) {
        if (!core[static_cast<std::size_t>(q)] || labels[static_cast<std::size_t>(q)] != kUnassigned)
          continue;
        labels[static_cast<std::size_t>(q)] = cluster;
        frontier.push_back(q);
      }
    }
  }

  // Border points join the nearest core cluster. Equidistant clusters are
  // ranked by size, then by their lexicographically smallest core point, so
  // the result does not depend on row order.
  std::vector<int> sizes(static_cast<std::size_t>(next), 0);
  std::vector<Eigen::Index> smallest(static_cast<std::size_t>(next), -1);
  auto lex_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c)
      if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
    return false;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    if (l < 0) continue;
    ++sizes[static_cast<std::size_t>(l)];
    auto& m = smallest[static_cast<std::size_t>(l)];
    if (m < 0 || lex_less(i, m)) m = i;
  }
  auto better = [&](int a, int b) {
    if (sizes[static_cast<std::size_t>(a)] != sizes[static_cast<std::size_t>(b)])
      return sizes[static_cast<std::size_t>(a)] > sizes[static_cast<std::size_t>(b)];
    return lex_less(smallest[static_cast<std::size_t>(a)], smallest[static_cast<std::size_t>(b)]);
  };
  std::vector<int> border(static_cast<std::size_t>(n), kUnassigned);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (core[static_cast<std::size_t>(i)]) continue;
    int best = kUnassigned;
    double best_dist = 0.0;
    for (Eigen::Index q : neighbours[static_cast<std::size_t>(i)]) {
      if (!core[static_cast<std::size_t>(q)]) continue;
      const int l = labels[static_cast<std::size_t>(q)];
      const double d = dist(i, q);
      if (best == kUnassigned || d < best_dist || (d == best_dist && l != best && better(l, best))) {
        best = l;
        best_dist = d;
      }
    }
    border[static_cast<std::size_t>(i)] = best;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!core[static_cast<std::size_t>(i)]) labels[static_cast<std::size_t>(i)] = border[static_cast<std::size_t>(i)];
  for (int& l : labels)
    if (l == kUnassigned) l = kNoise;
  canonicalize_labels(labels);
  return labels;
}

ClusterAssignment dbscan(const FeatureMatrix& matrix, double eps, int min_samples) {
  ClusterAssignment a;
  a.record_ids = matrix.record_ids;
  a.labels = dbscan_labels(matrix.rows, eps, min_samples);
  a.k = 0;
  for (int l : a.labels) a.k = std::max(a.k, l + 1);
  a.algorithm = Algorithm::DBSCAN;
  a.params["eps"] = eps;
  a.params["min_samples"] = min_samples;
  return a;
}

}  // namespace loggrouper
