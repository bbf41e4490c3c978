#include "loggrouper/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loggrouper/error.hpp"

namespace loggrouper {
namespace {

struct Members {
  std::vector<Eigen::Index> index;  // non-noise rows
  std::vector<int> label;           // dense 0..k-1
  int k = 0;
};

Members collect(const Matrix& points, const std::vector<int>& labels) {
  if (labels.size() != static_cast<std::size_t>(points.rows()))
    throw Error(ErrorCode::InvalidArgument, "label count does not match row count");
  Members m;
  std::vector<int> dense = labels;
  m.k = canonicalize_labels(dense);
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] == kNoise) continue;
    m.index.push_back(static_cast<Eigen::Index>(i));
    m.label.push_back(dense[i]);
  }
  return m;
}

int algorithm_rank(Algorithm a) {
  switch (a) {
    case Algorithm::DBSCAN: return 0;
    case Algorithm::Agglomerative: return 1;
    case Algorithm::KMeans: return 2;
    case Algorithm::Spectral: return 3;
  }
  return 4;
}

}  // namespace

std::string combo_key(const Combo& combo) {
  return std::string(to_string(combo.vectorizer)) + "/" +
         (combo.preprocessed ? "preprocessed" : "raw") + "/" +
         std::string(to_string(combo.algorithm));
}

Combo parse_combo_key(std::string_view key) {
  const auto a = key.find('/');
  const auto b = a == std::string_view::npos ? a : key.find('/', a + 1);
  if (b == std::string_view::npos)
    throw Error(ErrorCode::Parse, "malformed combo key '" + std::string(key) + "'");
  Combo c;
  c.vectorizer = parse_vectorizer(key.substr(0, a));
  const auto variant = key.substr(a + 1, b - a - 1);
  if (variant != "raw" && variant != "preprocessed")
    throw Error(ErrorCode::Parse, "malformed combo key '" + std::string(key) + "'");
  c.preprocessed = variant == "preprocessed";
  c.algorithm = parse_algorithm(key.substr(b + 1));
  return c;
}

double silhouette(const Matrix& points, const std::vector<int>& labels) {
  const Members m = collect(points, labels);
  if (m.k < 2) throw Error(ErrorCode::Degenerate, "undefined silhouette: fewer than two clusters");
  const std::size_t n = m.index.size();
  std::vector<int> sizes(static_cast<std::size_t>(m.k), 0);
  for (int l : m.label) ++sizes[static_cast<std::size_t>(l)];

  double total = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(m.k));
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sums[static_cast<std::size_t>(m.label[j])] +=
          (points.row(m.index[i]) - points.row(m.index[j])).norm();
    }
    const auto own = static_cast<std::size_t>(m.label[i]);
    if (sizes[own] < 2) continue;  // singleton scores 0
    const double a = sums[own] / (sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c)
      if (c != own) b = std::min(b, sums[c] / sizes[c]);
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double silhouette(const FeatureMatrix& matrix, const ClusterAssignment& assignment) {
  return silhouette(matrix.rows, assignment.labels);
}

double calinski_harabasz(const Matrix& points, const std::vector<int>& labels) {
  const Members m = collect(points, labels);
  const auto n = static_cast<Eigen::Index>(m.index.size());
  if (m.k < 2 || m.k >= n)
    throw Error(ErrorCode::Degenerate,
                "Calinski-Harabasz needs 2 <= k < n (k=" + std::to_string(m.k) +
                    ", n=" + std::to_string(n) + ")");
  const Eigen::Index d = points.cols();
  Vector overall = Vector::Zero(d);
  Matrix centroid_sum = Matrix::Zero(m.k, d);
  std::vector<double> sizes(static_cast<std::size_t>(m.k), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = points.row(m.index[static_cast<std::size_t>(i)]);
    overall += row.transpose();
    centroid_sum.row(m.label[static_cast<std::size_t>(i)]) += row;
    sizes[static_cast<std::size_t>(m.label[static_cast<std::size_t>(i)])] += 1.0;
  }
  overall /= static_cast<double>(n);
  for (int c = 0; c < m.k; ++c) centroid_sum.row(c) /= sizes[static_cast<std::size_t>(c)];

  double between = 0.0;
  for (int c = 0; c < m.k; ++c)
    between += sizes[static_cast<std::size_t>(c)] *
               (centroid_sum.row(c).transpose() - overall).squaredNorm();
  double within = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    within += (points.row(m.index[static_cast<std::size_t>(i)]) -
               centroid_sum.row(m.label[static_cast<std::size_t>(i)]))
                  .squaredNorm();
  if (!(within > 0.0))
    throw Error(ErrorCode::Degenerate, "zero within-cluster dispersion: score unbounded");
  return (between / (m.k - 1)) / (within / static_cast<double>(n - m.k));
}

double calinski_harabasz(const FeatureMatrix& matrix, const ClusterAssignment& assignment) {
  return calinski_harabasz(matrix.rows, assignment.labels);
}

std::vector<std::optional<NormalizedScore>> normalize_scores(
    const std::vector<QualityScore>& scores) {
  double sc_lo = std::numeric_limits<double>::infinity(), sc_hi = -sc_lo;
  double ch_lo = sc_lo, ch_hi = -sc_lo;
  std::size_t valid = 0;
  for (const auto& s : scores) {
    if (!s.valid) continue;
    ++valid;
    sc_lo = std::min(sc_lo, s.sc);
    sc_hi = std::max(sc_hi, s.sc);
    ch_lo = std::min(ch_lo, s.ch);
    ch_hi = std::max(ch_hi, s.ch);
  }
  if (valid < 2)
    throw Error(ErrorCode::InvalidArgument, "normalization needs at least two valid scores");
  auto scale = [](double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.5;
  };
  std::vector<std::optional<NormalizedScore>> out;
  out.reserve(scores.size());
  for (const auto& s : scores) {
    if (!s.valid) {
      out.emplace_back();
      continue;
    }
    out.push_back(NormalizedScore{scale(s.sc, sc_lo, sc_hi), scale(s.ch, ch_lo, ch_hi)});
  }
  return out;
}

std::map<Algorithm, GroupAverage> group_averages(
    const std::vector<QualityScore>& scores,
    const std::vector<std::optional<NormalizedScore>>& normalized) {
  std::map<Algorithm, GroupAverage> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!normalized[i]) continue;
    auto& g = out[scores[i].combo.algorithm];
    g.ansc += normalized[i]->nsc;
    g.anch += normalized[i]->nch;
    ++g.combos;
  }
  for (auto& [alg, g] : out) {
    g.ansc /= g.combos;
    g.anch /= g.combos;
  }
  return out;
}

Combo select_best(const QualityReport& report) {
  std::optional<std::size_t> best;
  double best_mean = 0.0;
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    const auto& s = report.scores[i];
    if (!s.valid || i >= report.normalized.size() || !report.normalized[i]) continue;
    const double mean = (report.normalized[i]->nsc + report.normalized[i]->nch) / 2.0;
    if (!best) {
      best = i;
      best_mean = mean;
      continue;
    }
    const auto& b = report.scores[*best];
    bool better = mean > best_mean;
    if (mean == best_mean) {
      if (s.n_clusters != b.n_clusters) {
        better = s.n_clusters < b.n_clusters;
      } else if (s.combo.algorithm != b.combo.algorithm) {
        better = algorithm_rank(s.combo.algorithm) < algorithm_rank(b.combo.algorithm);
      } else {
        better = s.combo < b.combo;
      }
    }
    if (better) {
      best = i;
      best_mean = mean;
    }
  }
  if (!best) throw Error(ErrorCode::InvalidArgument, "no valid combination to select from");
  return report.scores[*best].combo;
}

QualityReport build_report(std::vector<QualityScore> scores) {
  std::sort(scores.begin(), scores.end(),
            [](const QualityScore& a, const QualityScore& b) { return a.combo < b.combo; });
  QualityReport report;
  report.scores = std::move(scores);
  const auto valid = std::count_if(report.scores.begin(), report.scores.end(),
                                   [](const QualityScore& s) { return s.valid; });
  if (valid >= 2) {
    report.normalized = normalize_scores(report.scores);
  } else {
    // A lone valid combo has nothing to be normalized against.
    for (const auto& s : report.scores)
      report.normalized.push_back(s.valid ? std::optional<NormalizedScore>(NormalizedScore{0.5, 0.5})
                                          : std::nullopt);
  }
  report.group_averages = group_averages(report.scores, report.normalized);
  if (valid >= 1) report.best_combo = select_best(report);
  return report;
}

}  // namespace loggrouper
