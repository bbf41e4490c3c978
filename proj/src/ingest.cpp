#include "loggrouper/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

#include "json.hpp"

#include "loggrouper/error.hpp"

namespace loggrouper {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string required_string(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null())
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) +
                                      ": missing required field '" + field + "'");
  if (!it->is_string())
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": field '" +
                                      field + "' must be a string");
  return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string())
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": field '" +
                                      field + "' must be a string");
  return it->get<std::string>();
}

void check_unique(const std::vector<LogRecord>& records) {
  std::set<std::string_view> seen;
  for (const auto& r : records)
    if (!seen.insert(r.id).second)
      throw Error(ErrorCode::Parse, "duplicate record id '" + r.id + "'");
}

}  // namespace

std::string_view to_string(Severity s) noexcept {
  return s == Severity::Critical ? "critical" : "error";
}

std::optional<Severity> SeverityMap::lookup(std::string_view raw) const {
  auto it = table.find(lower(trim(raw)));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

bool WindowSpec::contains(const LogRecord& r) const {
  if (!r.timestamp) return false;
  if (*r.timestamp < from || *r.timestamp >= to) return false;
  return branches.empty() || branches.count(r.branch) > 0;
}

const LogRecord* Corpus::find(std::string_view id) const {
  for (const auto& r : records)
    if (r.id == id) return &r;
  return nullptr;
}

std::string synthesize_id(std::string_view source, std::uint64_t offset) {
  std::uint64_t h = fnv1a(source);
  h = fnv1a("\x1f", h);
  h = fnv1a(std::to_string(offset), h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ParseResult parse_structured(std::istream& in, const SeverityMap& severities) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Parse,
                  "line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object())
      throw Error(ErrorCode::Parse,
                  "line " + std::to_string(line_no) + ": expected a JSON object");

    const auto severity = severities.lookup(required_string(obj, "severity", line_no));
    if (!severity) {
      ++result.dropped;
      continue;
    }

    LogRecord rec;
    rec.severity = *severity;
    const auto ts_text = required_string(obj, "timestamp", line_no);
    rec.timestamp = parse_timestamp(ts_text);
    if (!rec.timestamp)
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) +
                                        ": invalid RFC3339 timestamp '" + ts_text + "'");
    rec.branch = required_string(obj, "branch", line_no);
    rec.session_id = required_string(obj, "session_id", line_no);
    rec.message = required_string(obj, "message", line_no);
    if (trim(rec.message).empty())
      throw Error(ErrorCode::Parse,
                  "line " + std::to_string(line_no) + ": field 'message' is empty");
    rec.test_id = optional_string(obj, "test_id", line_no);
    rec.source = optional_string(obj, "source", line_no);
    rec.id = optional_string(obj, "id", line_no);
    if (rec.id.empty()) rec.id = synthesize_id(rec.source, line_no);
    result.records.push_back(std::move(rec));
  }
  check_unique(result.records);
  return result;
}

ParseResult parse_structured(std::string_view text, const SeverityMap& severities) {
  std::istringstream in{std::string(text)};
  return parse_structured(in, severities);
}

void write_structured(std::ostream& out, const std::vector<LogRecord>& records) {
  for (const auto& r : records) {
    json obj;
    obj["id"] = r.id;
    if (r.timestamp) obj["timestamp"] = format_timestamp(*r.timestamp);
    obj["branch"] = r.branch;
    obj["session_id"] = r.session_id;
    if (!r.test_id.empty()) obj["test_id"] = r.test_id;
    obj["severity"] = std::string(to_string(r.severity));
    obj["message"] = r.message;
    if (!r.source.empty()) obj["source"] = r.source;
    out << obj.dump() << '\n';
  }
}

std::string write_structured(const std::vector<LogRecord>& records) {
  std::ostringstream out;
  write_structured(out, records);
  return out.str();
}

PlaintextRules PlaintextRules::defaults() {
  PlaintextRules rules;
  rules.timestamp_pattern =
      R"(^\s*\[?(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:?\d{2})?))";
  rules.severity_pattern =
      R"(\b(error|err|critical|crit|fatal|warning|warn|notice|info|debug)\b)";
  rules.boundary_pattern = R"(^\s*\[?\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2})";
  return rules;
}

PlaintextRules PlaintextRules::parse(std::string_view text) {
  PlaintextRules rules = defaults();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::Parse,
                  "rules line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = lower(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (key == "timestamp") {
      rules.timestamp_pattern = value;
    } else if (key == "severity") {
      rules.severity_pattern = value;
    } else if (key == "boundary") {
      rules.boundary_pattern = value;
    } else if (key == "branch") {
      rules.branch = value;
    } else if (key == "session") {
      rules.session_id = value;
    } else if (key.rfind("map.", 0) == 0) {
      const std::string target = lower(value);
      if (target == "error") {
        rules.severities.table[key.substr(4)] = Severity::Error;
      } else if (target == "critical") {
        rules.severities.table[key.substr(4)] = Severity::Critical;
      } else if (target == "drop") {
        rules.severities.table.erase(key.substr(4));
      } else {
        throw Error(ErrorCode::Parse, "rules line " + std::to_string(line_no) +
                                          ": severity must map to error, critical or drop");
      }
    } else {
      throw Error(ErrorCode::Parse,
                  "rules line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return rules;
}

ParseResult parse_plaintext(std::istream& in, const PlaintextRules& rules,
                            std::string_view source) {
  std::regex timestamp_re, severity_re, boundary_re;
  try {
    timestamp_re = std::regex(rules.timestamp_pattern, std::regex::ECMAScript);
    severity_re = std::regex(rules.severity_pattern,
                             std::regex::ECMAScript | std::regex::icase);
    boundary_re = std::regex(rules.boundary_pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("invalid rules pattern: ") + e.what());
  }

  struct Entry {
    std::uint64_t offset = 0;
    std::vector<std::string> lines;
  };

  ParseResult result;
  auto flush = [&](Entry& entry) {
    if (entry.lines.empty()) return;
    const std::string& head = entry.lines.front();
    std::smatch m;
    std::optional<Severity> severity;
    if (std::regex_search(head, m, severity_re))
      severity = rules.severities.lookup(m.size() > 1 && m[1].matched ? m[1].str() : m[0].str());
    if (!severity) {
      ++result.dropped;
      entry.lines.clear();
      return;
    }
    LogRecord rec;
    rec.severity = *severity;
    if (std::regex_search(head, m, timestamp_re))
      rec.timestamp = parse_timestamp(m.size() > 1 && m[1].matched ? m[1].str() : m[0].str());
    for (std::size_t i = 0; i < entry.lines.size(); ++i) {
      if (i) rec.message += '\n';
      rec.message += entry.lines[i];
    }
    rec.source = std::string(source);
    rec.branch = rules.branch;
    rec.session_id = rules.session_id;
    rec.id = synthesize_id(source, entry.offset);
    if (!trim(rec.message).empty()) result.records.push_back(std::move(rec));
    entry.lines.clear();
  };

  Entry current;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    const std::uint64_t line_offset = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::regex_search(line, boundary_re)) {
      flush(current);
      current.offset = line_offset;
      current.lines.push_back(line);
    } else if (!current.lines.empty() && !trim(line).empty()) {
      current.lines.push_back(line);
    }
  }
  flush(current);
  check_unique(result.records);
  return result;
}

ParseResult parse_plaintext(std::string_view text, const PlaintextRules& rules,
                            std::string_view source) {
  std::istringstream in{std::string(text)};
  return parse_plaintext(in, rules, source);
}

Corpus select_window(const std::vector<LogRecord>& records, const WindowSpec& window) {
  if (!(window.from < window.to))
    throw Error(ErrorCode::InvalidArgument, "window 'from' must precede 'to'");
  Corpus corpus;
  corpus.window = window;
  for (const auto& r : records) {
    if (!r.timestamp) {
      ++corpus.unplaced;
      continue;
    }
    if (window.contains(r)) corpus.records.push_back(r);
  }
  std::sort(corpus.records.begin(), corpus.records.end(),
            [](const LogRecord& a, const LogRecord& b) {
              if (*a.timestamp != *b.timestamp) return *a.timestamp < *b.timestamp;
              return a.id < b.id;
            });
  if (corpus.records.size() < 2)
    throw Error(ErrorCode::EmptyData,
                "empty window: " + std::to_string(corpus.records.size()) +
                    " record(s) selected, clustering needs at least 2");
  corpus.created_at = *corpus.records.back().timestamp;
  return corpus;
}

}  // namespace loggrouper
