#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "loggrouper/vectorize.hpp"

namespace loggrouper {

enum class Algorithm { KMeans, Agglomerative, DBSCAN, Spectral };

std::string_view to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view name);

enum class Linkage { Ward, Average };

constexpr int kNoise = -1;

struct ClusterAssignment {
  std::vector<std::string> record_ids;
  std::vector<int> labels;
  int k = 0;  // clusters excluding noise
  Algorithm algorithm = Algorithm::KMeans;
  // Tuned parameters and diagnostics ("k", "eps", "min_samples", "sse", ...).
  std::map<std::string, double> params;
  std::uint64_t seed = 0;

  std::size_t noise_count() const;
};

// Relabels clusters 0..k-1 in order of first appearance; noise stays -1.
int canonicalize_labels(std::vector<int>& labels);

double within_cluster_sse(const Matrix& points, const std::vector<int>& labels);

struct KMeansOptions {
  int restarts = 20;
  int max_iterations = 300;
  double tolerance = 1e-6;
};

struct KMeansResult {
  ClusterAssignment assignment;
  Matrix centroids;
  double sse = 0.0;
  // SSE after every Lloyd iteration of the winning restart.
  std::vector<double> sse_trace;
  int empty_repairs = 0;
};

KMeansResult kmeans_detailed(const Matrix& points, int k, std::uint64_t seed,
                             const KMeansOptions& options = {});
ClusterAssignment kmeans(const FeatureMatrix& matrix, int k, std::uint64_t seed,
                         const KMeansOptions& options = {});

ClusterAssignment agglomerative(const FeatureMatrix& matrix, int k,
                                Linkage linkage = Linkage::Ward);
std::vector<int> agglomerative_labels(const Matrix& points, int k,
                                      Linkage linkage = Linkage::Ward);

ClusterAssignment dbscan(const FeatureMatrix& matrix, double eps, int min_samples);
std::vector<int> dbscan_labels(const Matrix& points, double eps, int min_samples);

ClusterAssignment spectral(const FeatureMatrix& matrix, int k, std::uint64_t seed);
// Spectral embedding + k-means on a precomputed symmetric affinity.
std::vector<int> spectral_from_affinity(const Matrix& affinity, int k, std::uint64_t seed);

struct ElbowCurve {
  std::vector<int> ks;
  std::vector<double> values;
  int chosen_k = 0;
};

// Max distance to the chord between the first and last points of the
// min-max normalized curve; ties go to the smaller k.
int find_elbow(const std::vector<int>& ks, const std::vector<double>& values);

struct ElbowResult {
  ElbowCurve curve;
  ClusterAssignment assignment;  // the clustering at chosen_k
};

ElbowResult elbow_select_k(const FeatureMatrix& matrix, const std::vector<int>& k_range,
                           Algorithm clusterer, std::uint64_t seed,
                           Linkage linkage = Linkage::Ward);

// Distance of every point to its (min_samples - 1)-th nearest neighbour.
std::vector<double> k_distances(const Matrix& points, int min_samples);
double greedy_eps(const FeatureMatrix& matrix, int min_samples);

int default_min_samples(int dims);

Matrix pairwise_distances(const Matrix& points);

}  // namespace loggrouper
