#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <thread>

#include "loggrouper/error.hpp"
#include "loggrouper/vectorize.hpp"

#include "httplib.h"
#include "json.hpp"

using namespace loggrouper;
using doctest::Approx;

namespace {

FeatureMatrix dense(std::initializer_list<std::initializer_list<double>> rows) {
  FeatureMatrix m;
  m.rows.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m.rows(i, j++) = v;
    m.record_ids.push_back("r" + std::to_string(i));
    ++i;
  }
  m.zero_rows.assign(rows.size(), false);
  return m;
}

double entry(const TfidfModel& model, const TfidfMatrix& m, int row, const std::string& term) {
  return m.rows.coeff(row, model.vocabulary.at(term));
}

}  // namespace

TEST_SUITE("vectorize") {
  TEST_CASE("n-grams of one to three words") {
    const auto grams = word_ngrams("error link down", 1, 3);
    CHECK(grams == std::vector<std::string>{"error", "link", "down", "error link", "link down",
                                            "error link down"});
  }

  TEST_CASE("smoothed idf") {
    const auto model = fit_tfidf({"error link down", "error link up"});
    CHECK(model.idf[model.vocabulary.at("error")] == Approx(1.0).epsilon(1e-12));
    CHECK(model.idf[model.vocabulary.at("down")] == Approx(std::log(1.5) + 1.0).epsilon(1e-12));
    CHECK(model.idf[model.vocabulary.at("down")] == Approx(1.4055).epsilon(1e-4));
    CHECK(model.vocabulary.size() == 9);
    int expected = 0;
    for (const auto& [term, col] : model.vocabulary) CHECK(col == expected++);
  }

  TEST_CASE("unigram row values") {
    const auto model = fit_tfidf({"error link down", "error link up"}, {1, 1, 1});
    const auto m = transform_tfidf(model, {"error link down"});
    CHECK(entry(model, m, 0, "error") == Approx(0.5016).epsilon(1e-3));
    CHECK(entry(model, m, 0, "link") == Approx(0.5016).epsilon(1e-3));
    CHECK(entry(model, m, 0, "down") == Approx(0.7050).epsilon(1e-3));
    const double norm = 1.0 / std::sqrt(2.0 + std::pow(std::log(1.5) + 1.0, 2));
    CHECK(entry(model, m, 0, "error") == Approx(norm).epsilon(1e-12));
  }

  TEST_CASE("min_df prunes rare terms") {
    const auto model = fit_tfidf({"error link down", "error link up"}, {1, 3, 2});
    CHECK(model.vocabulary.size() == 3);
    CHECK(model.vocabulary.count("error link") == 1);
    CHECK(model.vocabulary.count("down") == 0);
  }

  TEST_CASE("empty and unseen texts give flagged zero rows") {
    const auto model = fit_tfidf({"error link down", "error link up"});
    const auto m = transform_tfidf(model, {"", "brand new words", "link"});
    CHECK(m.zero_rows == std::vector<bool>{true, true, false});
    CHECK(m.rows.row(0).norm() == 0.0);
    CHECK(m.rows.row(2).norm() == Approx(1.0));
  }

  TEST_CASE("all-empty corpus is rejected") {
    CHECK_THROWS_AS(fit_tfidf({"", "  "}), Error);
    CHECK_THROWS_AS(fit_tfidf({"only one", ""}), Error);
  }

  TEST_CASE("pca on a diagonal line") {
    const auto m = dense({{1, 1}, {2, 2}, {3, 3}});
    const auto model = fit_pca(m);
    REQUIRE(model.rank() == 1);
    CHECK(model.components(0, 0) == Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(model.components(0, 1) == Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(model.explained_variance_ratio[0] == Approx(1.0).epsilon(1e-12));
    const auto p = apply_pca(model, m);
    REQUIRE(p.dims() == 1);
    CHECK(p.rows(0, 0) == Approx(-std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::abs(p.rows(1, 0)) < 1e-12);
    CHECK(p.rows(2, 0) == Approx(std::sqrt(2.0)).epsilon(1e-12));
  }

  TEST_CASE("isotropic data keeps both components") {
    const auto m = dense({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    const auto model = fit_pca(m);
    CHECK(model.rank() == 2);
    CHECK(model.explained_variance_ratio[0] == Approx(0.5));
    CHECK(model.explained_variance_ratio[1] == Approx(0.5));
  }

  TEST_CASE("two rows give at most one component") {
    const auto model = fit_pca(dense({{0, 1, 2}, {3, 1, 0}}), {1.0, 100});
    CHECK(model.rank() == 1);
  }

  TEST_CASE("zero variance is degenerate") {
    try {
      fit_pca(dense({{1, 2}, {1, 2}, {1, 2}}));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Degenerate);
      CHECK(std::string(e.what()).find("degenerate matrix") != std::string::npos);
    }
  }

  TEST_CASE("projecting the mean gives the origin and mismatched dims fail") {
    const auto m = dense({{1, 0, 2}, {3, 1, 0}, {0, 2, 1}, {2, 2, 2}});
    const auto model = fit_pca(m, {1.0, 100});
    FeatureMatrix mean;
    mean.rows = model.mean.transpose();
    mean.record_ids = {"mean"};
    mean.zero_rows = {false};
    CHECK(apply_pca(model, mean).rows.norm() < 1e-12);
    CHECK_THROWS_AS(apply_pca(model, dense({{1, 2}})), Error);
  }

  TEST_CASE("sign convention makes the largest loading non-negative") {
    const auto m = dense({{0, 0, 5}, {1, 0, -3}, {0, 2, 1}, {1, 1, -2}, {2, 0, 0}});
    const auto model = fit_pca(m, {1.0, 100});
    for (Eigen::Index r = 0; r < model.rank(); ++r) {
      Eigen::Index arg = 0;
      model.components.row(r).cwiseAbs().maxCoeff(&arg);
      CHECK(model.components(r, arg) >= 0.0);
    }
  }

  TEST_CASE("sparse and dense inputs agree, and so do both routes") {
    const std::vector<std::string> docs{"link down eth0 eth0", "link up eth0", "fan failure on psu",
                                       "fan ok", "link flap on eth0 and eth1"};
    const auto model = fit_tfidf(docs);
    const auto sparse = transform_tfidf(model, docs);
    const auto a = apply_pca(fit_pca(sparse, {1.0, 100}), sparse);
    const auto b = apply_pca(fit_pca(to_dense(sparse), {1.0, 100}), to_dense(sparse));
    PcaOptions cov{1.0, 100, PcaOptions::Route::Covariance};
    const auto c = apply_pca(fit_pca(to_dense(sparse), cov), to_dense(sparse));
    REQUIRE(a.dims() == b.dims());
    REQUIRE(a.dims() == c.dims());
    CHECK((a.rows - b.rows).norm() < 1e-9);
    CHECK((a.rows - c.rows).norm() < 1e-9);
  }

  TEST_CASE("word vector file loading") {
    const auto load = load_word_vectors("2 3\nlink 1 0 0\ndown 0 1 0\n");
    CHECK(load.table.dim == 3);
    CHECK(load.table.entries.size() == 2);
    CHECK(load.warnings.empty());
    try {
      load_word_vectors("2 3\nlink 1 0 0\ndown 0 1\n");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    const auto dup = load_word_vectors("2 2\nlink 1 0\nlink 0 1\n");
    CHECK(dup.table.entries.size() == 1);
    CHECK(dup.warnings.size() == 1);
    CHECK((*dup.table.find("link"))(1) == 1.0);
  }

  TEST_CASE("document averaging") {
    const auto table = load_word_vectors("2 2\nt1 1 0\nt2 0 1\n").table;
    const auto m = embed_average(table, {{"t1", "t2"}, {"zz"}, {"t1"}, {}});
    CHECK(m.rows(0, 0) == 0.5);
    CHECK(m.rows(0, 1) == 0.5);
    CHECK(m.rows.row(1).norm() == 0.0);
    CHECK(m.zero_rows == std::vector<bool>{false, true, false, true});
    CHECK(m.rows(2, 0) == 1.0);
    CHECK(m.rows(2, 1) == 0.0);
    const auto upper = embed_average(table, {{"T1"}});
    CHECK(upper.rows(0, 0) == 1.0);
  }

  TEST_CASE("precomputed embeddings are matched by id") {
    const auto p = PrecomputedEmbeddings::parse(
        "{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\",\"vector\":[3,4]}\n"
        "{\"id\":\"c\",\"vector\":[5,6]}\n");
    const auto m = embed_external(p, {"c", "a", "b"}, {"x", "y", "z"}, false);
    CHECK(m.rows(0, 0) == 5);
    CHECK(m.rows(1, 1) == 2);
    CHECK(m.vectorizer == VectorizerTag::External);
    const auto short_file = PrecomputedEmbeddings::parse(
        "{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\",\"vector\":[3,4]}\n");
    CHECK_THROWS_AS(embed_external(short_file, {"a", "b", "c"}, {"x", "y", "z"}, false), Error);
    const auto mixed = PrecomputedEmbeddings::parse(
        "{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\",\"vector\":[3,4,5]}\n");
    CHECK_THROWS_AS(embed_external(mixed, {"a", "b"}, {"x", "y"}, false), Error);
  }

  TEST_CASE("http provider contract") {
    httplib::Server server;
    bool mixed = false;
    server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json vectors = nlohmann::json::array();
      for (std::size_t i = 0; i < body["texts"].size(); ++i)
        vectors.push_back(mixed && i == 1 ? nlohmann::json{1.0}
                                          : nlohmann::json{static_cast<double>(i), 1.0});
      res.set_content(nlohmann::json{{"dim", 2}, {"vectors", vectors}}.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpEmbeddingProvider provider("http://127.0.0.1:" + std::to_string(port));
    const auto m = embed_external(provider, {"a", "b", "c"}, {"x", "y", "z"}, false);
    CHECK(m.rows.rows() == 3);
    CHECK(m.rows(2, 0) == 2.0);
    mixed = true;
    CHECK_THROWS_AS(embed_external(provider, {"a", "b"}, {"x", "y"}, false), Error);
    server.stop();
    t.join();

    HttpEmbeddingProvider dead("http://127.0.0.1:" + std::to_string(port), 1);
    try {
      embed_external(dead, {"a"}, {"x"}, false);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Unavailable);
    }
  }

  TEST_CASE("row normalization") {
    auto m = dense({{3, 4}, {0, 0}});
    l2_normalize_rows(m);
    CHECK(m.rows(0, 0) == Approx(0.6));
    CHECK(m.rows.row(1).norm() == 0.0);
  }
}
