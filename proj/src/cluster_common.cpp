#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "loggrouper/cluster.hpp"
#include "loggrouper/error.hpp"

namespace loggrouper {

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::KMeans: return "kmeans";
    case Algorithm::Agglomerative: return "agglomerative";
    case Algorithm::DBSCAN: return "dbscan";
    case Algorithm::Spectral: return "spectral";
  }
  return "kmeans";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "kmeans") return Algorithm::KMeans;
  if (name == "agglomerative") return Algorithm::Agglomerative;
  if (name == "dbscan") return Algorithm::DBSCAN;
  if (name == "spectral") return Algorithm::Spectral;
  throw Error(ErrorCode::InvalidArgument, "unknown clusterer '" + std::string(name) + "'");
}

std::size_t ClusterAssignment::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

int canonicalize_labels(std::vector<int>& labels) {
  std::unordered_map<int, int> remap;
  int next = 0;
  for (int& l : labels) {
    if (l == kNoise) continue;
    auto [it, inserted] = remap.emplace(l, next);
    if (inserted) ++next;
    l = it->second;
  }
  return next;
}

double within_cluster_sse(const Matrix& points, const std::vector<int>& labels) {
  std::map<int, std::pair<Vector, int>> sums;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    if (l == kNoise) continue;
    auto [it, inserted] = sums.try_emplace(l, Vector::Zero(points.cols()), 0);
    it->second.first += points.row(i).transpose();
    ++it->second.second;
  }
  double sse = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    if (l == kNoise) continue;
    const auto& [sum, count] = sums.at(l);
    sse += (points.row(i).transpose() - sum / count).squaredNorm();
  }
  return sse;
}

Matrix pairwise_distances(const Matrix& points) {
  const Eigen::Index n = points.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

int default_min_samples(int dims) {
  if (dims < 1) throw Error(ErrorCode::InvalidArgument, "dims must be positive");
  return std::max(4, 2 * dims);
}

}  // namespace loggrouper
