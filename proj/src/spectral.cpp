#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "cluster_internal.hpp"
#include "loggrouper/error.hpp"

namespace loggrouper {
namespace detail {

Matrix rbf_affinity(const Matrix& points) {
  const Eigen::Index n = points.rows();
  const Matrix dist = pairwise_distances(points);
  std::vector<double> upper;
  upper.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) upper.push_back(dist(i, j));
  if (upper.empty()) throw Error(ErrorCode::InvalidArgument, "spectral needs at least two points");
  std::sort(upper.begin(), upper.end());
  const std::size_t m = upper.size();
  const double sigma = m % 2 ? upper[m / 2] : 0.5 * (upper[m / 2 - 1] + upper[m / 2]);
  if (!(sigma > 0.0))
    throw Error(ErrorCode::Degenerate, "degenerate affinity: median pairwise distance is zero");
  Matrix w = (-dist.array().square() / (2.0 * sigma * sigma)).exp().matrix();
  w.diagonal().setZero();
  return w;
}

SpectralBasis spectral_basis(const Matrix& affinity) {
  const Eigen::Index n = affinity.rows();
  if (affinity.cols() != n) throw Error(ErrorCode::InvalidArgument, "affinity must be square");
  Vector inv_sqrt_degree(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double degree = affinity.row(i).sum();
    inv_sqrt_degree(i) = degree > 0.0 ? 1.0 / std::sqrt(degree) : 0.0;
  }
  Matrix laplacian = -(inv_sqrt_degree.asDiagonal() * affinity * inv_sqrt_degree.asDiagonal());
  laplacian.diagonal().array() += 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(laplacian);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::Internal, "Laplacian eigendecomposition failed");
  SpectralBasis basis{solver.eigenvectors(), solver.eigenvalues()};
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index arg;
    basis.vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis.vectors(arg, c) < 0.0) basis.vectors.col(c) *= -1.0;
  }
  return basis;
}

std::vector<int> spectral_labels(const SpectralBasis& basis, int k, std::uint64_t seed) {
  const Eigen::Index n = basis.vectors.rows();
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "spectral clustering needs k >= 2");
  if (k > n)
    throw Error(ErrorCode::InvalidArgument,
                "k=" + std::to_string(k) + " exceeds the number of points (" +
                    std::to_string(n) + ")");
  Matrix embedding = basis.vectors.leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  return kmeans_detailed(embedding, k, seed).assignment.labels;
}

}  // namespace detail

std::vector<int> spectral_from_affinity(const Matrix& affinity, int k, std::uint64_t seed) {
  return detail::spectral_labels(detail::spectral_basis(affinity), k, seed);
}

ClusterAssignment spectral(const FeatureMatrix& matrix, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "spectral clustering needs k >= 2");
  ClusterAssignment a;
  a.record_ids = matrix.record_ids;
  a.labels = spectral_from_affinity(detail::rbf_affinity(matrix.rows), k, seed);
  a.k = canonicalize_labels(a.labels);
  a.algorithm = Algorithm::Spectral;
  a.seed = seed;
  a.params["k"] = k;
  a.params["sse"] = within_cluster_sse(matrix.rows, a.labels);
  return a;
}

}  // namespace loggrouper
