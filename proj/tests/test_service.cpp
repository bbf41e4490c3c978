#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <thread>

// loggrouper headers pull in Eigen, which must precede httplib.h.
#include "loggrouper/error.hpp"
#include "loggrouper/ingest.hpp"
#include "loggrouper/service.hpp"
#include "planted.hpp"

#include "httplib.h"
#include "json.hpp"

using namespace loggrouper;
using nlohmann::json;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

struct Harness {
  fs::path root;
  std::unique_ptr<Service> service;
  std::jthread thread;
  std::unique_ptr<httplib::Client> client;

  explicit Harness(const std::string& tag, bool fresh = true) {
    root = fs::temp_directory_path() / ("lg-service-" + tag + "-" + std::to_string(::getpid()));
    if (fresh) {
      fs::remove_all(root);
      fs::create_directories(root / "corpora");
      std::ofstream(root / "corpora" / "planted.jsonl") << write_structured(planted::make().records);
    }
    ServiceConfig cfg;
    cfg.port = 0;
    cfg.artifact_root = (root / "runs").string();
    cfg.corpus_root = (root / "corpora").string();
    service = std::make_unique<Service>(cfg);
    const int port = service->bind();
    thread = std::jthread([this] { service->listen(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(30, 0);
  }
  ~Harness() {
    service->stop();
    thread.join();
  }

  std::pair<int, json> get(const std::string& path) {
    auto r = client->Get(path);
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }
  std::pair<int, json> post(const json& body, const httplib::Headers& headers = {}) {
    auto r = client->Post("/api/v1/runs", headers, body.dump(), "application/json");
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }
  std::string done_run(const json& body) {
    auto [status, reply] = post(body);
    REQUIRE(status == 202);
    const auto id = reply["run_id"].get<std::string>();
    REQUIRE(service->wait_for(id, 60s));
    return id;
  }
};

json tfidf_body() {
  return {{"corpus", "planted"}, {"config", {{"vectorizers", {"tfidf"}}, {"seed", 42}}}};
}

std::string error_code(const json& body) { return body["error"]["code"].get<std::string>(); }

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("run lifecycle") {
    Harness h("life");
    auto [status, reply] = h.post(tfidf_body());
    CHECK(status == 202);
    CHECK(reply["status"] == "pending");
    const auto id = reply["run_id"].get<std::string>();
    auto [s0, early] = h.get("/api/v1/runs/" + id);
    CHECK(s0 == 200);
    if (early["status"] != "done") CHECK(!early.contains("report"));

    REQUIRE(h.service->wait_for(id, 60s));
    auto [s1, done] = h.get("/api/v1/runs/" + id);
    CHECK(s1 == 200);
    CHECK(done["status"] == "done");
    CHECK(done.contains("report"));
    CHECK(done["best_combo"].is_string());
    CHECK(done["k"] == 3);
    CHECK(fs::exists(h.root / "runs" / id / "manifest.json"));
  }

  TEST_CASE("groups are consistent with logs") {
    Harness h("groups");
    const auto id = h.done_run(tfidf_body());
    auto [status, body] = h.get("/api/v1/runs/" + id + "/groups");
    REQUIRE(status == 200);
    std::size_t total = 0;
    std::size_t last_size = SIZE_MAX;
    for (const auto& g : body["groups"]) {
      const auto size = g["size"].get<std::size_t>();
      if (!g["noise"].get<bool>()) {
        CHECK(size <= last_size);
        last_size = size;
      }
      CHECK(g["member_ids"].size() == size);
      CHECK(!g["top_phrases"].empty());
      total += size;
      for (const auto& m : g["member_ids"]) {
        auto [s, record] = h.get("/api/v1/logs/" + m.get<std::string>());
        CHECK(s == 200);
        CHECK(record["id"] == m);
      }
    }
    CHECK(total == 60);
    CHECK(body["groups"].size() == 3);

    auto [ps, page] = h.get("/api/v1/runs/" + id + "/groups?limit=2&offset=1");
    CHECK(ps == 200);
    CHECK(page["groups"][0]["member_ids"].size() == 2);
    CHECK(page["groups"][0]["member_ids"][0] == body["groups"][0]["member_ids"][1]);
  }

  TEST_CASE("word clouds") {
    Harness h("cloud");
    const auto id = h.done_run(tfidf_body());
    auto [status, cloud] = h.get("/api/v1/runs/" + id + "/groups/0/wordcloud");
    CHECK(status == 200);
    CHECK(cloud["cluster"] == 0);
    REQUIRE(!cloud["phrases"].empty());
    CHECK(cloud["phrases"][0]["weight"] == 1.0);
    for (const auto& p : cloud["phrases"]) {
      CHECK(p["text"].is_string());
      CHECK(p["score"].get<double>() > 0);
    }
    CHECK(error_code(h.get("/api/v1/runs/" + id + "/groups/9/wordcloud").second) == "not_found");
    CHECK(h.get("/api/v1/runs/" + id + "/groups/zero/wordcloud").first == 404);
  }

  TEST_CASE("done responses are stable") {
    Harness h("stable");
    const auto id = h.done_run(tfidf_body());
    for (auto path : {"", "/groups", "/groups/1/wordcloud"}) {
      const auto a = h.client->Get("/api/v1/runs/" + id + path);
      const auto b = h.client->Get("/api/v1/runs/" + id + path);
      REQUIRE(a);
      REQUIRE(b);
      CHECK(a->body == b->body);
    }
  }

  TEST_CASE("inline corpus keeps multi-line messages intact") {
    Harness h("inline");
    auto p = planted::make();
    p.records[5].message += "\n  at frame 1\n  at frame 2";
    const json body{{"corpus_jsonl", write_structured(p.records)},
                    {"config", {{"vectorizers", {"tfidf"}}, {"clusterers", {"kmeans"}}}}};
    h.done_run(body);
    auto [status, record] = h.get("/api/v1/logs/" + p.records[5].id);
    CHECK(status == 200);
    CHECK(record["message"] == p.records[5].message);
  }

  TEST_CASE("error codes") {
    Harness h("errors");
    SUBCASE("invalid_config") {
      auto body = tfidf_body();
      body["config"]["clusterers"] = json::array();
      auto [status, reply] = h.post(body);
      CHECK(status == 400);
      CHECK(error_code(reply) == "invalid_config");
      auto r = h.client->Post("/api/v1/runs", "{not json", "application/json");
      REQUIRE(r);
      CHECK(r->status == 400);
    }
    SUBCASE("not_found") {
      auto body = tfidf_body();
      body["corpus"] = "nightly-missing";
      auto [status, reply] = h.post(body);
      CHECK(status == 404);
      CHECK(error_code(reply) == "not_found");
      CHECK(error_code(h.get("/api/v1/runs/run-0000").second) == "not_found");
      CHECK(error_code(h.get("/api/v1/logs/nope").second) == "not_found");
      CHECK(error_code(h.get("/api/v1/nothing-here").second) == "not_found");
    }
    SUBCASE("conflict") {
      const httplib::Headers key{{"Idempotency-Key", "nightly-2024-03-01"}};
      auto [s1, first] = h.post(tfidf_body(), key);
      CHECK(s1 == 202);
      auto [s2, second] = h.post(tfidf_body(), key);
      CHECK(s2 == 409);
      CHECK(error_code(second) == "conflict");
      CHECK(second["error"]["detail"]["run_id"] == first["run_id"]);
      auto body = tfidf_body();
      body["idempotency_key"] = "nightly-2024-03-01";
      CHECK(h.post(body).first == 409);
      h.service->wait_for(first["run_id"].get<std::string>(), 60s);
    }
    SUBCASE("not_ready") {
      auto p = planted::make(4);
      for (auto& r : p.records) r.message = "identical failure text";
      const json body{{"corpus_jsonl", write_structured(p.records)},
                      {"config", {{"vectorizers", {"tfidf"}}, {"clusterers", {"dbscan"}}}}};
      const auto id = h.done_run(body);
      auto [s, run] = h.get("/api/v1/runs/" + id);
      CHECK(run["status"] == "failed");
      CHECK(!run["failure_reasons"].empty());
      auto [status, reply] = h.get("/api/v1/runs/" + id + "/groups");
      CHECK(status == 409);
      CHECK(error_code(reply) == "not_ready");
    }
    SUBCASE("provider_unavailable") {
      auto body = tfidf_body();
      body["config"]["vectorizers"] = {"external"};
      body["config"]["provider"] = (h.root / "missing.json").string();
      auto [status, reply] = h.post(body);
      CHECK(status == 503);
      CHECK(error_code(reply) == "provider_unavailable");
      body = tfidf_body();
      body["config"]["vectorizers"] = {"fasttext"};
      body["config"]["word_vectors"] = (h.root / "missing.vec").string();
      CHECK(h.post(body).first == 503);
    }
    SUBCASE("internal") {
      fs::create_directories(h.root / "runs" / "run-broken");
      std::ofstream(h.root / "runs" / "run-broken" / "manifest.json") << "{\"format_version\": 1";
      auto [status, reply] = h.get("/api/v1/runs/run-broken");
      CHECK(status == 500);
      CHECK(error_code(reply) == "internal");
      CHECK(reply["error"]["message"].get<std::string>().find("manifest.json") != std::string::npos);
    }
  }

  TEST_CASE("persisted runs survive a restart") {
    std::string id;
    {
      Harness h("restart");
      id = h.done_run(tfidf_body());
    }
    Harness again("restart", false);
    auto [status, run] = again.get("/api/v1/runs/" + id);
    CHECK(status == 200);
    CHECK(run["status"] == "done");
    auto [gs, groups] = again.get("/api/v1/runs/" + id + "/groups");
    CHECK(gs == 200);
    const auto member = groups["groups"][0]["member_ids"][0].get<std::string>();
    CHECK(again.get("/api/v1/logs/" + member).first == 200);
    fs::remove_all(again.root);
  }

  TEST_CASE("service configuration") {
    const auto cfg = ServiceConfig::parse(R"({"host": "0.0.0.0", "port": 9100, "artifact_root": "/tmp/a"})");
    CHECK(cfg.host == "0.0.0.0");
    CHECK(cfg.port == 9100);
    CHECK(cfg.artifact_root == "/tmp/a");
    CHECK_THROWS_AS(ServiceConfig::parse(R"({"port": "eighty"})"), Error);
    CHECK_THROWS_AS(ServiceConfig::parse("[1]"), Error);

    ::setenv("LOGGROUPER_PORT", "9200", 1);
    auto env = cfg;
    env.apply_environment();
    CHECK(env.port == 9200);
    ::setenv("LOGGROUPER_PORT", "http", 1);
    CHECK_THROWS_AS(env.apply_environment(), Error);
    ::unsetenv("LOGGROUPER_PORT");
  }

  TEST_CASE("binding a taken port is unavailable") {
    Harness h("bind");
    ServiceConfig cfg;
    cfg.port = h.service->port();
    cfg.artifact_root = (h.root / "runs2").string();
    Service second(cfg);
    try {
      second.bind();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Unavailable);
    }
  }
}
