#pragma once

#include <map>
#include <vector>

#include "loggrouper/cluster.hpp"

namespace loggrouper::detail {

std::map<int, std::vector<int>> agglomerative_cuts(const Matrix& points,
                                                   const std::vector<int>& ks,
                                                   Linkage linkage);

// Eigenvectors of the normalized Laplacian, ascending eigenvalue order,
// with a deterministic sign per column.
struct SpectralBasis {
  Matrix vectors;  // n x n
  Vector eigenvalues;
};

Matrix rbf_affinity(const Matrix& points);
SpectralBasis spectral_basis(const Matrix& affinity);
std::vector<int> spectral_labels(const SpectralBasis& basis, int k, std::uint64_t seed);

}  // namespace loggrouper::detail
