#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "json_codec.hpp"
#include "loggrouper/error.hpp"
#include "loggrouper/pipeline.hpp"

namespace loggrouper {
namespace {

namespace fs = std::filesystem;
using codec::json;

constexpr int kFormatVersion = 1;

json elbow_json(const ElbowCurve& e) {
  return {{"ks", e.ks}, {"values", e.values}, {"chosen_k", e.chosen_k}};
}

json manifest(const PipelineRun& run) {
  json combos = json::array();
  for (const auto& c : run.combos) {
    json e = {{"combo", combo_key(c.combo)}, {"ok", c.ok}};
    if (!c.ok) e["reason"] = c.reason;
    combos.push_back(std::move(e));
  }
  json j;
  j["format_version"] = kFormatVersion;
  j["status"] = std::string(to_string(run.status));
  j["config"] = codec::to_json(run.config);
  j["corpus"] = {{"records", run.corpus.records.size()},
                 {"unplaced", run.corpus.unplaced},
                 {"created_at", format_timestamp(run.corpus.created_at)}};
  j["combos"] = std::move(combos);
  j["failure_reasons"] = run.failure_reasons;
  j["files"] = {"manifest.json", "report.json", "assignments.json", "clouds.json",
                "corpus.jsonl", "timings.json"};
  return j;
}

json assignments(const PipelineRun& run) {
  std::vector<std::string> ids;
  for (const auto& r : run.corpus.records) ids.push_back(r.id);
  json combos = json::array();
  for (const auto& c : run.combos) {
    json e;
    e["combo"] = combo_key(c.combo);
    e["ok"] = c.ok;
    if (!c.ok) {
      e["reason"] = c.reason;
    } else {
      e["algorithm"] = std::string(to_string(c.assignment.algorithm));
      e["k"] = c.assignment.k;
      e["labels"] = c.assignment.labels;
      e["params"] = c.assignment.params;
      e["seed"] = c.assignment.seed;
      if (c.elbow) e["elbow"] = elbow_json(*c.elbow);
    }
    combos.push_back(std::move(e));
  }
  return {{"record_ids", std::move(ids)}, {"combos", std::move(combos)}};
}

json clouds(const PipelineRun& run) {
  json out = json::array();
  for (const auto& c : run.clouds) out.push_back(codec::to_json(c));
  return out;
}

json timings(const PipelineRun& run) {
  json out = json::array();
  for (const auto& [stage, ms] : run.timings_ms) out.push_back({{"stage", stage}, {"ms", ms}});
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Corrupt, "missing artifact " + path.filename().string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, path.filename().string() + ": " + e.what());
  }
}

}  // namespace

std::string manifest_json(const PipelineRun& run) { return manifest(run).dump(2) + "\n"; }

std::string report_json(const PipelineRun& run) {
  return (run.report ? codec::to_json(*run.report) : json(nullptr)).dump(2) + "\n";
}

std::string assignments_json(const PipelineRun& run) { return assignments(run).dump(2) + "\n"; }

std::string clouds_json(const PipelineRun& run) { return clouds(run).dump(2) + "\n"; }

std::string persist_run(const PipelineRun& run, const std::string& root) {
  if (run.run_id.empty() || run.run_id.find('/') != std::string::npos || run.run_id[0] == '.')
    throw Error(ErrorCode::InvalidArgument, "invalid run id '" + run.run_id + "'");
  const fs::path base(root);
  const fs::path target = base / run.run_id;
  std::error_code ec;
  fs::create_directories(base, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create artifact root " + root + ": " + ec.message());
  if (fs::exists(target)) throw Error(ErrorCode::Exists, "run " + run.run_id + " already persisted");

  const fs::path staging = base / (".staging-" + run.run_id + "-" + std::to_string(::getpid()));
  fs::remove_all(staging, ec);
  fs::create_directory(staging, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + staging.string() + ": " + ec.message());
  try {
    write_file(staging / "manifest.json", manifest_json(run));
    if (run.report) write_file(staging / "report.json", report_json(run));
    write_file(staging / "assignments.json", assignments_json(run));
    write_file(staging / "clouds.json", clouds_json(run));
    write_file(staging / "corpus.jsonl", write_structured(run.corpus.records));
    write_file(staging / "timings.json", timings(run).dump(2) + "\n");
    fs::rename(staging, target);
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(staging, ec);
    if (fs::exists(target)) throw Error(ErrorCode::Exists, "run " + run.run_id + " already persisted");
    throw Error(ErrorCode::Io, e.what());
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
  return target.string();
}

PipelineRun load_run(const std::string& run_id, const std::string& root) {
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id[0] == '.')
    throw Error(ErrorCode::NotFound, "unknown run '" + run_id + "'");
  const fs::path dir = fs::path(root) / run_id;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::NotFound, "unknown run '" + run_id + "'");

  PipelineRun run;
  run.run_id = run_id;
  const json m = read_json(dir / "manifest.json");
  try {
    if (m.at("format_version").get<int>() != kFormatVersion)
      throw Error(ErrorCode::Corrupt, "manifest.json: unsupported format version");
    run.status = parse_run_status(m.at("status").get<std::string>());
    run.config = codec::config_from_json(m.at("config"));
    run.failure_reasons = m.at("failure_reasons").get<std::vector<std::string>>();
    auto created = parse_timestamp(m.at("corpus").at("created_at").get<std::string>());
    if (!created) throw Error(ErrorCode::Corrupt, "manifest.json: bad created_at");
    run.corpus.created_at = *created;
    run.corpus.unplaced = m.at("corpus").at("unplaced").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, std::string("manifest.json: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Corrupt) throw;
    throw Error(ErrorCode::Corrupt, std::string("manifest.json: ") + e.what());
  }
  run.corpus.window = run.config.window;

  try {
    run.corpus.records = parse_structured(read_file(dir / "corpus.jsonl")).records;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Corrupt) throw;
    throw Error(ErrorCode::Corrupt, std::string("corpus.jsonl: ") + e.what());
  }
  if (run.corpus.records.size() != m["corpus"]["records"].get<std::size_t>())
    throw Error(ErrorCode::Corrupt, "corpus.jsonl: record count differs from manifest.json");

  if (run.status == RunStatus::Done) {
    try {
      run.report = codec::report_from_json(read_json(dir / "report.json"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Corrupt, std::string("report.json: ") + e.what());
    }
  }

  const json a = read_json(dir / "assignments.json");
  try {
    const auto ids = a.at("record_ids").get<std::vector<std::string>>();
    if (ids.size() != run.corpus.records.size())
      throw Error(ErrorCode::Corrupt, "assignments.json: record_ids differ from corpus.jsonl");
    for (const auto& e : a.at("combos")) {
      ComboResult c;
      c.combo = parse_combo_key(e.at("combo").get<std::string>());
      c.ok = e.at("ok").get<bool>();
      if (!c.ok) {
        c.reason = e.at("reason").get<std::string>();
      } else {
        c.assignment.record_ids = ids;
        c.assignment.algorithm = parse_algorithm(e.at("algorithm").get<std::string>());
        c.assignment.k = e.at("k").get<int>();
        c.assignment.labels = e.at("labels").get<std::vector<int>>();
        c.assignment.params = e.at("params").get<std::map<std::string, double>>();
        c.assignment.seed = e.at("seed").get<std::uint64_t>();
        if (c.assignment.labels.size() != ids.size())
          throw Error(ErrorCode::Corrupt, "assignments.json: label count differs from record_ids");
        if (e.contains("elbow")) {
          const auto& el = e["elbow"];
          c.elbow = ElbowCurve{el.at("ks").get<std::vector<int>>(),
                               el.at("values").get<std::vector<double>>(),
                               el.at("chosen_k").get<int>()};
        }
      }
      run.combos.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, std::string("assignments.json: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Corrupt) throw;
    throw Error(ErrorCode::Corrupt, std::string("assignments.json: ") + e.what());
  }

  const json cl = read_json(dir / "clouds.json");
  try {
    for (const auto& c : cl) run.clouds.push_back(codec::cloud_from_json(c));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Corrupt, std::string("clouds.json: ") + e.what());
  }

  if (fs::exists(dir / "timings.json")) {
    try {
      for (const auto& t : read_json(dir / "timings.json"))
        run.timings_ms.emplace_back(t.at("stage").get<std::string>(), t.at("ms").get<double>());
    } catch (const std::exception&) {
      // Timings are diagnostic only.
      run.timings_ms.clear();
    }
  }
  return run;
}

}  // namespace loggrouper
