#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cluster_internal.hpp"
#include "loggrouper/cluster.hpp"
#include "loggrouper/error.hpp"
#include "oracles.hpp"

using namespace loggrouper;
using doctest::Approx;

namespace {

FeatureMatrix line(std::vector<double> xs) {
  FeatureMatrix m;
  m.rows.resize(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    m.rows(static_cast<Eigen::Index>(i), 0) = xs[i];
    m.record_ids.push_back("p" + std::to_string(i));
  }
  m.zero_rows.assign(xs.size(), false);
  return m;
}

FeatureMatrix blobs(int per_blob, std::vector<std::pair<double, double>> centers, double spread,
                    std::uint64_t seed, std::vector<int>* truth = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  FeatureMatrix m;
  m.rows.resize(per_blob * static_cast<int>(centers.size()), 2);
  int row = 0;
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (int i = 0; i < per_blob; ++i, ++row) {
      m.rows(row, 0) = centers[c].first + noise(rng);
      m.rows(row, 1) = centers[c].second + noise(rng);
      m.record_ids.push_back("b" + std::to_string(row));
      if (truth) truth->push_back(static_cast<int>(c));
    }
  m.zero_rows.assign(static_cast<std::size_t>(row), false);
  return m;
}

}  // namespace

TEST_SUITE("cluster") {
  TEST_CASE("kmeans on {0,1,10,11}") {
    const auto r = kmeans_detailed(line({0, 1, 10, 11}).rows, 2, 42);
    CHECK(r.assignment.labels == std::vector<int>{0, 0, 1, 1});
    CHECK(r.sse == Approx(1.0).epsilon(1e-12));
    std::vector<double> c{r.centroids(0, 0), r.centroids(1, 0)};
    std::sort(c.begin(), c.end());
    CHECK(c[0] == Approx(0.5));
    CHECK(c[1] == Approx(10.5));
    const auto a = kmeans(line({0, 1, 10, 11}), 2, 42);
    CHECK(a.params.at("sse") == Approx(1.0));
    CHECK(a.seed == 42);
  }

  TEST_CASE("kmeans with k = n gives singletons and zero SSE") {
    const auto r = kmeans_detailed(line({3, 1, 4, 1.5, 9}).rows, 5, 1);
    CHECK(r.assignment.k == 5);
    CHECK(r.sse == Approx(0.0));
  }

  TEST_CASE("kmeans repairs an empty cluster on duplicate points") {
    const auto r = kmeans_detailed(line({2, 2, 2, 2}).rows, 2, 3);
    CHECK(r.empty_repairs >= 1);
    CHECK(r.assignment.labels.size() == 4);
  }

  TEST_CASE("kmeans rejects k > n") {
    CHECK_THROWS_AS(kmeans(line({0, 1}), 3, 1), Error);
  }

  TEST_CASE("kmeans SSE never increases across Lloyd iterations") {
    std::vector<int> truth;
    const auto m = blobs(15, {{0, 0}, {3, 0}, {0, 3}}, 1.2, 5);
    const auto r = kmeans_detailed(m.rows, 3, 11);
    for (std::size_t i = 1; i < r.sse_trace.size(); ++i)
      CHECK(r.sse_trace[i] <= r.sse_trace[i - 1] + 1e-12);
  }

  TEST_CASE("ward merges nearest pairs first") {
    const auto a = agglomerative(line({0, 1, 10, 11}), 2);
    CHECK(a.labels == std::vector<int>{0, 0, 1, 1});
    CHECK(agglomerative(line({0, 1, 10, 11}), 4).k == 4);
    CHECK(agglomerative(line({0, 1, 10, 11}), 1).labels == std::vector<int>{0, 0, 0, 0});
  }

  TEST_CASE("equidistant ties resolve by the smallest index pair") {
    FeatureMatrix m;
    m.rows = Matrix::Identity(3, 3);
    m.record_ids = {"a", "b", "c"};
    m.zero_rows.assign(3, false);
    CHECK(agglomerative(m, 2).labels == std::vector<int>{0, 0, 1});
    CHECK(agglomerative(m, 2, Linkage::Average).labels == std::vector<int>{0, 0, 1});
  }

  TEST_CASE("cuts from one merge sequence match independent runs") {
    const auto m = blobs(8, {{0, 0}, {4, 0}, {0, 4}, {4, 4}}, 0.8, 9);
    const auto cuts = detail::agglomerative_cuts(m.rows, {2, 3, 4, 5, 6}, Linkage::Ward);
    for (int k : {2, 3, 4, 5, 6}) CHECK(cuts.at(k) == agglomerative_labels(m.rows, k));
  }

  TEST_CASE("dbscan planted set") {
    const auto a = dbscan(line({0, 1, 2, 10, 11, 12, 50}), 1.5, 2);
    CHECK(a.labels == std::vector<int>{0, 0, 0, 1, 1, 1, -1});
    CHECK(a.k == 2);
    CHECK(a.noise_count() == 1);
    CHECK(a.params.at("eps") == 1.5);
  }

  TEST_CASE("dbscan extremes") {
    const auto m = line({0, 1, 2, 10, 11, 12, 50});
    const auto all = dbscan(m, 100.0, 7);
    CHECK(all.k == 1);
    CHECK(all.noise_count() == 0);
    const auto none = dbscan(m, 1.5, 8);
    CHECK(none.k == 0);
    CHECK(none.noise_count() == 7);
    CHECK_THROWS_AS(dbscan(m, 0.0, 2), Error);
  }

  TEST_CASE("dbscan closed ball includes the boundary") {
    CHECK(dbscan(line({0, 1, 5}), 1.0, 2).labels == std::vector<int>{0, 0, -1});
  }

  TEST_CASE("spectral separates two tight blobs") {
    std::vector<int> truth;
    const auto m = blobs(10, {{0, 0}, {20, 20}}, 0.3, 4, &truth);
    const auto a = spectral(m, 2, 42);
    CHECK(oracle::ari(a.labels, truth) == 1.0);
    CHECK_THROWS_AS(spectral(m, 1, 42), Error);
  }

  TEST_CASE("spectral on a block-diagonal affinity") {
    Matrix w = Matrix::Zero(7, 7);
    const std::vector<int> block{0, 0, 0, 1, 1, 1, 1};
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j)
        if (i != j && block[i] == block[j]) w(i, j) = 1.0;
    const auto basis = detail::spectral_basis(w);
    CHECK(basis.eigenvalues(1) == Approx(0.0).epsilon(1e-9));
    CHECK(basis.eigenvalues(2) > 0.5);
    CHECK(spectral_from_affinity(w, 2, 42) == block);
  }

  TEST_CASE("spectral on identical points is degenerate") {
    try {
      spectral(line({1, 1, 1, 1}), 2, 42);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("degenerate affinity") != std::string::npos);
    }
  }

  TEST_CASE("elbow on a published-shape curve") {
    CHECK(find_elbow({1, 2, 3, 4, 5, 6}, {100, 40, 15, 12, 11, 10}) == 3);
    CHECK(find_elbow({2, 3, 4, 5}, {40, 30, 20, 10}) == 3);
    CHECK_THROWS_AS(find_elbow({2, 3}, {5, 4}), Error);
  }

  TEST_CASE("elbow picks three planted blobs") {
    const auto m = blobs(12, {{0, 0}, {10, 0}, {5, 9}}, 0.6, 21);
    for (auto alg : {Algorithm::KMeans, Algorithm::Agglomerative, Algorithm::Spectral}) {
      const auto r = elbow_select_k(m, {2, 3, 4, 5, 6, 7, 8}, alg, 42);
      CHECK(r.curve.chosen_k == 3);
      CHECK(r.assignment.k == 3);
      CHECK(r.curve.values.size() == 7);
    }
    CHECK_THROWS_AS(elbow_select_k(m, {2, 3}, Algorithm::KMeans, 42), Error);
    CHECK_THROWS_AS(elbow_select_k(m, {2, 3, 4}, Algorithm::DBSCAN, 42), Error);
  }

  TEST_CASE("greedy eps on the planted set") {
    const auto m = line({0, 1, 2, 10, 11, 12, 50});
    const double eps = greedy_eps(m, 2);
    const auto a = dbscan(m, eps, 2);
    CHECK(a.k == 2);
    CHECK(a.noise_count() == 1);
  }

  TEST_CASE("greedy eps fails on duplicates and on a uniform grid") {
    CHECK_THROWS_AS(greedy_eps(line({3, 3, 3, 3, 3}), 2), Error);
    CHECK_THROWS_AS(greedy_eps(line({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), 2), Error);
  }

  TEST_CASE("k-distances") {
    CHECK(k_distances(line({0, 1, 3, 7}).rows, 2) == std::vector<double>{1, 1, 2, 4});
    CHECK(k_distances(line({0, 1, 3, 7}).rows, 3) == std::vector<double>{3, 2, 3, 6});
  }

  TEST_CASE("default min samples") {
    CHECK(default_min_samples(1) == 4);
    CHECK(default_min_samples(10) == 20);
    CHECK(std::min(default_min_samples(384), 50 - 1) == 49);
  }

  TEST_CASE("canonical labels follow first appearance") {
    std::vector<int> labels{5, -1, 2, 5, 9, 2};
    CHECK(canonicalize_labels(labels) == 3);
    CHECK(labels == std::vector<int>{0, -1, 1, 0, 2, 1});
  }

  TEST_CASE("algorithm names round-trip") {
    for (auto a : {Algorithm::KMeans, Algorithm::Agglomerative, Algorithm::DBSCAN, Algorithm::Spectral})
      CHECK(parse_algorithm(to_string(a)) == a);
    CHECK_THROWS_AS(parse_algorithm("optics"), Error);
  }
}
