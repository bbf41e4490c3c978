#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "loggrouper/loggrouper.h"

namespace fs = std::filesystem;

namespace {

// Three message shapes, twelve records each, built without the C++ API.
std::string corpus_jsonl() {
  const char* heads[] = {"link aggregation negotiation failed switch port uplink timeout",
                         "database connection pool exhausted schema migration worker stalled",
                         "kernel panic detected memory allocator thread watchdog reset"};
  std::string out;
  for (int i = 0; i < 36; ++i) {
    char line[512];
    std::snprintf(line, sizeof line,
                  "{\"id\":\"c-%02d\",\"timestamp\":\"2024-03-01T00:%02d:00Z\",\"branch\":\"main\","
                  "\"session_id\":\"s\",\"test_id\":\"t\",\"severity\":\"error\","
                  "\"message\":\"%s on host-%03d\",\"source\":\"console.log\"}\n",
                  i, i, heads[i % 3], i * 7919 % 997);
    out += line;
  }
  return out;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lg-capi-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kConfig = R"({"vectorizers": ["tfidf"], "preprocessing": "raw", "seed": 42})";

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("status names and version") {
    CHECK(std::string(lg_version()) == "0.1.0");
    CHECK(std::string(lg_status_name(LG_OK)) == "ok");
    CHECK(std::string(lg_status_name(LG_ERR_NOT_FOUND)) == "not_found");
    lg_string_free(nullptr);
    lg_records_free(nullptr);
    lg_run_free(nullptr);
  }

  TEST_CASE("parse errors carry line diagnostics") {
    const std::string bad = corpus_jsonl().substr(0, 200) + "\n{broken\n";
    lg_records* records = nullptr;
    size_t dropped = 0;
    CHECK(lg_records_parse_jsonl(bad.data(), bad.size(), &records, &dropped) == LG_ERR_PARSE);
    CHECK(records == nullptr);
    CHECK(std::string(lg_last_error()).find("line") != std::string::npos);
    CHECK(lg_records_parse_jsonl(nullptr, 5, &records, &dropped) == LG_ERR_INVALID_ARGUMENT);
  }

  TEST_CASE("plaintext with default rules") {
    const std::string text =
        "2024-03-01T10:00:00Z ERROR link failed on port 3\n"
        "  at frame 1\n"
        "2024-03-01T10:01:00Z INFO all good\n";
    lg_records* records = nullptr;
    size_t dropped = 0;
    REQUIRE(lg_records_parse_plaintext(text.data(), text.size(), nullptr, "console.log", &records,
                                       &dropped) == LG_OK);
    CHECK(lg_records_size(records) == 1);
    CHECK(dropped == 1);
    lg_records_free(records);
  }

  TEST_CASE("execute, persist, load, report") {
    TempDir dir;
    const auto text = corpus_jsonl();
    lg_records* records = nullptr;
    size_t dropped = 0;
    REQUIRE(lg_records_parse_jsonl(text.data(), text.size(), &records, &dropped) == LG_OK);
    CHECK(lg_records_size(records) == 36);
    const auto saved = (dir.path / "corpus.jsonl").string();
    REQUIRE(lg_records_save(records, saved.c_str()) == LG_OK);

    lg_run* run = nullptr;
    REQUIRE(lg_run_execute(records, kConfig, &run) == LG_OK);
    lg_records_free(records);
    CHECK(std::string(lg_run_status(run)) == "done");

    char* combo = nullptr;
    int k = 0;
    REQUIRE(lg_run_best(run, &combo, &k) == LG_OK);
    CHECK(k == 3);
    CHECK(std::string(combo).rfind("tfidf/raw/", 0) == 0);
    lg_string_free(combo);

    char* csv = nullptr;
    REQUIRE(lg_run_report(run, "csv", &csv) == LG_OK);
    CHECK(std::string(csv).rfind("vectorizer,", 0) == 0);
    lg_string_free(csv);
    char* unused = nullptr;
    CHECK(lg_run_report(run, "xml", &unused) == LG_ERR_INVALID_ARGUMENT);
    CHECK(lg_run_artifact(run, "bogus", &unused) == LG_ERR_INVALID_ARGUMENT);

    const auto run_dir = (dir.path / "runs" / "r1").string();
    REQUIRE(lg_run_persist(run, run_dir.c_str()) == LG_OK);
    CHECK(lg_run_persist(run, run_dir.c_str()) == LG_ERR_EXISTS);

    lg_run* back = nullptr;
    REQUIRE(lg_run_load(run_dir.c_str(), &back) == LG_OK);
    for (const char* name : {"manifest", "report", "assignments", "clouds"}) {
      char* a = nullptr;
      char* b = nullptr;
      REQUIRE(lg_run_artifact(run, name, &a) == LG_OK);
      REQUIRE(lg_run_artifact(back, name, &b) == LG_OK);
      CHECK(std::string(a) == std::string(b));
      lg_string_free(a);
      lg_string_free(b);
    }
    lg_run_free(back);
    lg_run_free(run);

    lg_records* loaded = nullptr;
    REQUIRE(lg_records_load(saved.c_str(), &loaded) == LG_OK);
    CHECK(lg_records_size(loaded) == 36);
    lg_records_free(loaded);
  }

  TEST_CASE("error statuses") {
    lg_records* records = nullptr;
    CHECK(lg_records_load("/nonexistent/corpus.jsonl", &records) == LG_ERR_NOT_FOUND);
    lg_run* run = nullptr;
    CHECK(lg_run_load("/nonexistent/run", &run) == LG_ERR_NOT_FOUND);

    const auto text = corpus_jsonl();
    size_t dropped = 0;
    const auto two_lines = text.find('\n', text.find('\n') + 1) + 1;
    REQUIRE(lg_records_parse_jsonl(text.data(), two_lines, &records, &dropped) == LG_OK);
    CHECK(lg_records_size(records) == 2);
    CHECK(lg_run_execute(records, kConfig, &run) == LG_ERR_EMPTY);
    CHECK(run == nullptr);
    lg_records_free(records);

    REQUIRE(lg_records_parse_jsonl(text.data(), text.size(), &records, &dropped) == LG_OK);
    CHECK(lg_run_execute(records, R"({"clusterers": ["optics"]})", &run) == LG_ERR_INVALID_ARGUMENT);
    CHECK(std::string(lg_last_error()).find("optics") != std::string::npos);
    CHECK(lg_run_execute(records, "{", &run) == LG_ERR_INVALID_ARGUMENT);
    lg_records_free(records);
  }
}
