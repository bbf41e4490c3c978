#include <limits>
#include <numeric>

#include "loggrouper/cluster.hpp"
#include "cluster_internal.hpp"
#include "loggrouper/error.hpp"

namespace loggrouper {
namespace {

struct Merge {
  Eigen::Index keep;
  Eigen::Index drop;
};

// Full merge sequence under the Lance-Williams update. Clusters live in the
// slot of their smallest member, so "smallest (i, j)" tie-breaking falls out
// of scanning slots in ascending order.
std::vector<Merge> merge_sequence(const Matrix& points, Linkage linkage, Eigen::Index stop_at) {
  const Eigen::Index n = points.rows();
  Matrix d = pairwise_distances(points);
  if (linkage == Linkage::Ward) d = d.array().square().matrix();

  std::vector<bool> active(static_cast<std::size_t>(n), true);
  std::vector<double> size(static_cast<std::size_t>(n), 1.0);
  std::vector<double> row_min(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> row_arg(static_cast<std::size_t>(n));
  constexpr double kInf = std::numeric_limits<double>::infinity();

  auto rescan = [&](Eigen::Index i) {
    row_min[static_cast<std::size_t>(i)] = kInf;
    row_arg[static_cast<std::size_t>(i)] = -1;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      if (d(i, j) < row_min[static_cast<std::size_t>(i)]) {
        row_min[static_cast<std::size_t>(i)] = d(i, j);
        row_arg[static_cast<std::size_t>(i)] = j;
      }
    }
  };
  for (Eigen::Index i = 0; i < n; ++i) rescan(i);

  std::vector<Merge> merges;
  for (Eigen::Index remaining = n; remaining > stop_at; --remaining) {
    Eigen::Index a = -1;
    double best = kInf;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)] || row_arg[static_cast<std::size_t>(i)] < 0) continue;
      if (row_min[static_cast<std::size_t>(i)] < best) {
        best = row_min[static_cast<std::size_t>(i)];
        a = i;
      }
    }
    const Eigen::Index b = row_arg[static_cast<std::size_t>(a)];
    const double na = size[static_cast<std::size_t>(a)];
    const double nb = size[static_cast<std::size_t>(b)];
    const double dab = d(a, b);
    for (Eigen::Index m = 0; m < n; ++m) {
      if (!active[static_cast<std::size_t>(m)] || m == a || m == b) continue;
      double v;
      if (linkage == Linkage::Ward) {
        const double nm = size[static_cast<std::size_t>(m)];
        v = ((na + nm) * d(m, a) + (nb + nm) * d(m, b) - nm * dab) / (na + nb + nm);
      } else {
        v = (na * d(m, a) + nb * d(m, b)) / (na + nb);
      }
      d(m, a) = v;
      d(a, m) = v;
    }
    active[static_cast<std::size_t>(b)] = false;
    size[static_cast<std::size_t>(a)] = na + nb;
    merges.push_back({a, b});

    rescan(a);
    for (Eigen::Index m = 0; m < n; ++m) {
      if (!active[static_cast<std::size_t>(m)] || m == a) continue;
      const Eigen::Index arg = row_arg[static_cast<std::size_t>(m)];
      if (m < a) {
        if (arg == a || arg == b) {
          rescan(m);
        } else if (d(m, a) < row_min[static_cast<std::size_t>(m)] ||
                   (d(m, a) == row_min[static_cast<std::size_t>(m)] && a < arg)) {
          row_min[static_cast<std::size_t>(m)] = d(m, a);
          row_arg[static_cast<std::size_t>(m)] = a;
        }
      } else if (m < b && arg == b) {
        rescan(m);
      }
    }
  }
  return merges;
}

std::vector<int> cut(Eigen::Index n, const std::vector<Merge>& merges, std::size_t applied) {
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto root = [&](Eigen::Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)];
    return i;
  };
  for (std::size_t m = 0; m < applied; ++m)
    parent[static_cast<std::size_t>(root(merges[m].drop))] = root(merges[m].keep);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(root(i));
  canonicalize_labels(labels);
  return labels;
}

void check_k(Eigen::Index n, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > n)
    throw Error(ErrorCode::InvalidArgument,
                "k=" + std::to_string(k) + " exceeds the number of points (" +
                    std::to_string(n) + ")");
}

}  // namespace

std::vector<int> agglomerative_labels(const Matrix& points, int k, Linkage linkage) {
  const Eigen::Index n = points.rows();
  check_k(n, k);
  const auto merges = merge_sequence(points, linkage, k);
  return cut(n, merges, merges.size());
}

namespace detail {

std::map<int, std::vector<int>> agglomerative_cuts(const Matrix& points,
                                                   const std::vector<int>& ks,
                                                   Linkage linkage) {
  const Eigen::Index n = points.rows();
  int smallest = std::numeric_limits<int>::max();
  for (int k : ks) {
    check_k(n, k);
    smallest = std::min(smallest, k);
  }
  std::map<int, std::vector<int>> out;
  if (ks.empty()) return out;
  const auto merges = merge_sequence(points, linkage, smallest);
  for (int k : ks) out[k] = cut(n, merges, static_cast<std::size_t>(n - k));
  return out;
}

}  // namespace detail

ClusterAssignment agglomerative(const FeatureMatrix& matrix, int k, Linkage linkage) {
  ClusterAssignment a;
  a.record_ids = matrix.record_ids;
  a.labels = agglomerative_labels(matrix.rows, k, linkage);
  a.k = k;
  a.algorithm = Algorithm::Agglomerative;
  a.params["k"] = k;
  a.params["sse"] = within_cluster_sse(matrix.rows, a.labels);
  return a;
}

}  // namespace loggrouper
