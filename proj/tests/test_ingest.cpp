#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "loggrouper/error.hpp"
#include "loggrouper/ingest.hpp"

using namespace loggrouper;

namespace {

std::string line(const std::string& id, const std::string& ts, const std::string& severity,
                 const std::string& branch = "main", const std::string& message = "link down") {
  return R"({"id":")" + id + R"(","timestamp":")" + ts + R"(","branch":")" + branch +
         R"(","session_id":"s1","severity":")" + severity + R"(","message":")" + message +
         R"(","source":"a.log"})" + "\n";
}

Timestamp ts(const char* text) { return parse_timestamp(text).value(); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Internal;
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("critical line maps to a Critical record") {
    const auto r = parse_structured(line("a", "2024-01-01T00:00:00Z", "critical"));
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].severity == Severity::Critical);
    CHECK(r.dropped == 0);
  }

  TEST_CASE("info line is dropped and counted") {
    const auto r = parse_structured(line("a", "2024-01-01T00:00:00Z", "info"));
    CHECK(r.records.empty());
    CHECK(r.dropped == 1);
  }

  TEST_CASE("2 error + 1 critical + 2 info gives 3 records and 2 drops") {
    std::string text = line("a", "2024-01-01T00:00:00Z", "error") +
                       line("b", "2024-01-01T00:00:01Z", "info") +
                       line("c", "2024-01-01T00:00:02Z", "error") +
                       line("d", "2024-01-01T00:00:03Z", "critical") +
                       line("e", "2024-01-01T00:00:04Z", "info");
    const auto r = parse_structured(text);
    CHECK(r.records.size() == 3);
    CHECK(r.dropped == 2);
  }

  TEST_CASE("malformed line names the line number") {
    std::string text = line("a", "2024-01-01T00:00:00Z", "error") + "{not json\n";
    try {
      parse_structured(text);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }

  TEST_CASE("missing required field is named") {
    try {
      parse_structured(R"({"timestamp":"2024-01-01T00:00:00Z","branch":"m","severity":"error","message":"x"})");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("session_id") != std::string::npos);
    }
  }

  TEST_CASE("missing id is synthesized deterministically and duplicates are rejected") {
    const std::string text =
        R"({"timestamp":"2024-01-01T00:00:00Z","branch":"m","session_id":"s","severity":"error","message":"x","source":"f"})";
    const auto a = parse_structured(text);
    const auto b = parse_structured(text);
    REQUIRE(a.records.size() == 1);
    CHECK(!a.records[0].id.empty());
    CHECK(a.records[0].id == b.records[0].id);
    CHECK(code_of([&] {
            parse_structured(line("x", "2024-01-01T00:00:00Z", "error") +
                             line("x", "2024-01-01T00:00:01Z", "error"));
          }) == ErrorCode::Parse);
  }

  TEST_CASE("plaintext merges continuation lines into one record") {
    const std::string log =
        "2024-01-02 03:04:05 ERROR link down on eth0\n"
        "    at driver.c:42\n"
        "2024-01-02 03:04:06 INFO all good\n"
        "2024-01-02 03:04:07 CRITICAL fan failure\n";
    const auto r = parse_plaintext(log, PlaintextRules::defaults(), "node.log");
    REQUIRE(r.records.size() == 2);
    CHECK(r.dropped == 1);
    CHECK(r.records[0].message == "2024-01-02 03:04:05 ERROR link down on eth0\n    at driver.c:42");
    CHECK(r.records[0].timestamp == ts("2024-01-02T03:04:05Z"));
    CHECK(r.records[1].severity == Severity::Critical);
  }

  TEST_CASE("plaintext with only info lines is empty") {
    const auto r = parse_plaintext("2024-01-02 03:04:05 INFO a\n2024-01-02 03:04:06 INFO b\n",
                                   PlaintextRules::defaults(), "x.log");
    CHECK(r.records.empty());
    CHECK(r.dropped == 2);
  }

  TEST_CASE("plaintext ids are stable across parses") {
    const std::string log = "2024-01-02 03:04:05 ERROR a\n2024-01-02 03:04:06 ERROR b\n";
    const auto a = parse_plaintext(log, PlaintextRules::defaults(), "x.log");
    const auto b = parse_plaintext(log, PlaintextRules::defaults(), "x.log");
    REQUIRE(a.records.size() == 2);
    CHECK(a.records[0].id == b.records[0].id);
    CHECK(a.records[1].id == b.records[1].id);
    CHECK(a.records[0].id != a.records[1].id);
  }

  TEST_CASE("rules file overrides patterns and severity mapping") {
    const auto rules = PlaintextRules::parse(
        "# custom\n"
        "boundary = ^<\n"
        "timestamp = ^<([^>]+)>\n"
        "severity = \\b(ALARM|OK)\\b\n"
        "branch = release\n"
        "map.alarm = critical\n");
    const auto r = parse_plaintext("<2024-01-02T03:04:05Z> ALARM psu\n<2024-01-02T03:04:06Z> OK\n",
                                   rules, "dev.log");
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].severity == Severity::Critical);
    CHECK(r.records[0].branch == "release");
    CHECK(code_of([] { PlaintextRules::parse("nonsense line"); }) == ErrorCode::Parse);
    CHECK(code_of([] { PlaintextRules::parse("map.x = loud"); }) == ErrorCode::Parse);
  }

  TEST_CASE("records without a timestamp are counted as unplaced") {
    auto rules = PlaintextRules::defaults();
    rules.boundary_pattern = "ERROR";
    const auto r = parse_plaintext("ERROR one\nERROR two\n2024-01-02 03:04:05 ERROR three\n"
                                   "2024-01-02 03:04:06 ERROR four\n",
                                   rules, "x.log");
    REQUIRE(r.records.size() == 4);
    const auto c = select_window(r.records, WindowSpec{});
    CHECK(c.records.size() == 2);
    CHECK(c.unplaced == 2);
  }

  TEST_CASE("window selects one night and sorts by (timestamp, id)") {
    std::vector<LogRecord> records;
    const char* stamps[] = {"2024-01-01T22:00:00Z", "2024-01-02T01:00:00Z", "2024-01-02T02:00:00Z",
                            "2024-01-02T23:00:00Z", "2024-01-03T00:30:00Z", "2024-01-03T01:00:00Z",
                            "2024-01-03T03:00:00Z", "2024-01-03T03:00:00Z", "2024-01-04T01:00:00Z",
                            "2024-01-04T02:00:00Z"};
    for (int i = 9; i >= 0; --i) {
      LogRecord r;
      r.id = "r" + std::to_string(i);
      r.timestamp = ts(stamps[i]);
      r.branch = "main";
      r.message = "m";
      records.push_back(r);
    }
    WindowSpec night2;
    night2.from = ts("2024-01-02T18:00:00Z");
    night2.to = ts("2024-01-03T06:00:00Z");
    const auto c = select_window(records, night2);
    REQUIRE(c.records.size() == 5);
    CHECK(c.records[0].id == "r3");
    CHECK(c.records[3].id == "r6");
    CHECK(c.records[4].id == "r7");
    CHECK(c.created_at == ts("2024-01-03T03:00:00Z"));
  }

  TEST_CASE("branch filter excludes other branches") {
    std::vector<LogRecord> records(3);
    for (int i = 0; i < 3; ++i) {
      records[i].id = std::to_string(i);
      records[i].timestamp = ts("2024-01-01T00:00:00Z") + std::chrono::seconds(i);
      records[i].branch = i == 1 ? "feature/x" : "main";
    }
    WindowSpec w;
    w.branches = {"main"};
    const auto c = select_window(records, w);
    CHECK(c.records.size() == 2);
    for (const auto& r : c.records) CHECK(r.branch == "main");
  }

  TEST_CASE("a single record is an empty window") {
    std::vector<LogRecord> records(1);
    records[0].id = "a";
    records[0].timestamp = ts("2024-01-01T00:00:00Z");
    CHECK(code_of([&] { select_window(records, WindowSpec{}); }) == ErrorCode::EmptyData);
  }

  TEST_CASE("timestamps parse with offsets and fractions") {
    CHECK(ts("2024-01-01T02:00:00+02:00") == ts("2024-01-01T00:00:00Z"));
    CHECK(format_timestamp(ts("2024-01-01T00:00:00.250Z")) == "2024-01-01T00:00:00.25Z");
    CHECK(format_timestamp(ts("2024-01-01 00:00:00")) == "2024-01-01T00:00:00Z");
    CHECK_FALSE(parse_timestamp("2024-13-01T00:00:00Z"));
    CHECK_FALSE(parse_timestamp("yesterday"));
  }
}
