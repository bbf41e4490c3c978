#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loggrouper/cluster.hpp"

namespace loggrouper {

struct Combo {
  VectorizerTag vectorizer = VectorizerTag::Tfidf;
  bool preprocessed = false;
  Algorithm algorithm = Algorithm::KMeans;

  auto operator<=>(const Combo&) const = default;
};

// "tfidf/raw/kmeans"
std::string combo_key(const Combo& combo);
Combo parse_combo_key(std::string_view key);

struct QualityScore {
  Combo combo;
  bool valid = true;
  std::string reason;  // why the combo failed, when !valid
  double sc = 0.0;
  double ch = 0.0;
  int n_clusters = 0;
  double noise_fraction = 0.0;
};

struct NormalizedScore {
  double nsc = 0.0;
  double nch = 0.0;
};

struct GroupAverage {
  double ansc = 0.0;
  double anch = 0.0;
  int combos = 0;
};

struct QualityReport {
  std::vector<QualityScore> scores;
  std::vector<std::optional<NormalizedScore>> normalized;  // aligned with scores
  std::map<Algorithm, GroupAverage> group_averages;
  std::optional<Combo> best_combo;
};

// Mean silhouette over non-noise samples; singleton members score 0.
double silhouette(const Matrix& points, const std::vector<int>& labels);
double silhouette(const FeatureMatrix& matrix, const ClusterAssignment& assignment);

// Variance-ratio criterion over non-noise samples.
double calinski_harabasz(const Matrix& points, const std::vector<int>& labels);
double calinski_harabasz(const FeatureMatrix& matrix, const ClusterAssignment& assignment);

// Min-max per metric across the valid scores; a constant metric maps to 0.5.
std::vector<std::optional<NormalizedScore>> normalize_scores(
    const std::vector<QualityScore>& scores);

std::map<Algorithm, GroupAverage> group_averages(
    const std::vector<QualityScore>& scores,
    const std::vector<std::optional<NormalizedScore>>& normalized);

// Highest (nsc + nch) / 2; ties prefer fewer clusters, then DBSCAN,
// Agglomerative, KMeans, Spectral, then combo order.
Combo select_best(const QualityReport& report);

// normalize + group averages + select_best; with a single valid score the
// normalization is skipped and that combo wins.
QualityReport build_report(std::vector<QualityScore> scores);

}  // namespace loggrouper
