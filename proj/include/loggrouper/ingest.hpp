#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "loggrouper/time.hpp"

namespace loggrouper {

enum class Severity { Error, Critical };

std::string_view to_string(Severity s) noexcept;

struct LogRecord {
  std::string id;
  // Empty only for plaintext records whose timestamp could not be parsed;
  // select_window counts those as placement errors.
  std::optional<Timestamp> timestamp;
  std::string branch;
  std::string session_id;
  std::string test_id;
  Severity severity = Severity::Error;
  std::string message;
  std::string source;

  bool operator==(const LogRecord&) const = default;
};

struct WindowSpec {
  Timestamp from = min_timestamp();
  Timestamp to = max_timestamp();
  std::set<std::string> branches;  // empty = all branches

  bool contains(const LogRecord& r) const;
  bool operator==(const WindowSpec&) const = default;
};

struct Corpus {
  std::vector<LogRecord> records;
  WindowSpec window;
  Timestamp created_at;
  std::size_t unplaced = 0;  // records dropped for lacking a timestamp

  const LogRecord* find(std::string_view id) const;
  bool operator==(const Corpus&) const = default;
};

// Maps source severity spellings (lowercased) onto the two kept classes.
// Anything absent from the table is dropped.
struct SeverityMap {
  std::map<std::string, Severity> table{
      {"error", Severity::Error},    {"err", Severity::Error},
      {"critical", Severity::Critical}, {"crit", Severity::Critical},
      {"fatal", Severity::Critical},
  };

  std::optional<Severity> lookup(std::string_view raw) const;
};

struct ParseResult {
  std::vector<LogRecord> records;
  std::size_t dropped = 0;
};

ParseResult parse_structured(std::istream& in, const SeverityMap& severities = {});
ParseResult parse_structured(std::string_view text, const SeverityMap& severities = {});

// Writes one record per line in the JSONL ingest schema.
void write_structured(std::ostream& out, const std::vector<LogRecord>& records);
std::string write_structured(const std::vector<LogRecord>& records);

struct PlaintextRules {
  std::string timestamp_pattern;  // group 1 (or whole match) is the timestamp
  std::string severity_pattern;   // group 1 is the severity word
  std::string boundary_pattern;   // a matching line starts a new entry
  std::string branch;
  std::string session_id;
  SeverityMap severities;

  static PlaintextRules defaults();
  // "key = value" lines; '#' starts a comment. Keys: timestamp, severity,
  // boundary, branch, session, map.<raw> = error|critical.
  static PlaintextRules parse(std::string_view text);
};

ParseResult parse_plaintext(std::istream& in, const PlaintextRules& rules,
                            std::string_view source);
ParseResult parse_plaintext(std::string_view text, const PlaintextRules& rules,
                            std::string_view source);

// Throws EmptyData when fewer than two records fall inside the window.
Corpus select_window(const std::vector<LogRecord>& records, const WindowSpec& window);

std::string synthesize_id(std::string_view source, std::uint64_t offset);

}  // namespace loggrouper
