#include "loggrouper/loggrouper.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "loggrouper/error.hpp"
#include "loggrouper/pipeline.hpp"
#include "loggrouper/report.hpp"
#include "loggrouper/service.hpp"

struct lg_records {
  std::vector<loggrouper::LogRecord> records;
};

struct lg_run {
  loggrouper::PipelineRun run;
};

namespace {

namespace fs = std::filesystem;
using loggrouper::Error;
using loggrouper::ErrorCode;

thread_local std::string last_error;

lg_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return LG_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return LG_ERR_PARSE;
    case ErrorCode::EmptyData: return LG_ERR_EMPTY;
    case ErrorCode::Degenerate: return LG_ERR_DEGENERATE;
    case ErrorCode::NotFound: return LG_ERR_NOT_FOUND;
    case ErrorCode::Exists: return LG_ERR_EXISTS;
    case ErrorCode::Corrupt: return LG_ERR_CORRUPT;
    case ErrorCode::Io: return LG_ERR_IO;
    case ErrorCode::Unavailable: return LG_ERR_UNAVAILABLE;
    case ErrorCode::NotReady: return LG_ERR_NOT_READY;
    case ErrorCode::Internal: return LG_ERR_INTERNAL;
  }
  return LG_ERR_INTERNAL;
}

template <typename Fn>
lg_status guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return LG_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return LG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return LG_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::pair<std::string, std::string> split_dir(const char* dir) {
  fs::path p = fs::path(dir).lexically_normal();
  if (!p.has_filename()) p = p.parent_path();
  std::string parent = p.parent_path().string();
  return {parent.empty() ? "." : parent, p.filename().string()};
}

}  // namespace

extern "C" {

const char* lg_version(void) { return "0.1.0"; }

const char* lg_last_error(void) { return last_error.c_str(); }

const char* lg_status_name(lg_status status) {
  switch (status) {
    case LG_OK: return "ok";
    case LG_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case LG_ERR_PARSE: return "parse";
    case LG_ERR_EMPTY: return "empty_data";
    case LG_ERR_DEGENERATE: return "degenerate";
    case LG_ERR_NOT_FOUND: return "not_found";
    case LG_ERR_EXISTS: return "exists";
    case LG_ERR_CORRUPT: return "corrupt";
    case LG_ERR_IO: return "io";
    case LG_ERR_UNAVAILABLE: return "unavailable";
    case LG_ERR_NOT_READY: return "not_ready";
    case LG_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void lg_string_free(char* s) { std::free(s); }

lg_status lg_records_parse_jsonl(const char* data, size_t len, lg_records** out,
                                 size_t* dropped) {
  return guard([&] {
    require(out, "out");
    if (!data && len) throw Error(ErrorCode::InvalidArgument, "data must not be null");
    auto parsed = loggrouper::parse_structured(std::string_view(data ? data : "", len));
    if (dropped) *dropped = parsed.dropped;
    *out = new lg_records{std::move(parsed.records)};
  });
}

lg_status lg_records_parse_plaintext(const char* data, size_t len, const char* rules,
                                     const char* source, lg_records** out, size_t* dropped) {
  return guard([&] {
    require(out, "out");
    if (!data && len) throw Error(ErrorCode::InvalidArgument, "data must not be null");
    const auto r = rules ? loggrouper::PlaintextRules::parse(rules)
                         : loggrouper::PlaintextRules::defaults();
    auto parsed = loggrouper::parse_plaintext(std::string_view(data ? data : "", len), r,
                                              source ? source : "");
    if (dropped) *dropped = parsed.dropped;
    *out = new lg_records{std::move(parsed.records)};
  });
}

lg_status lg_records_load(const char* path, lg_records** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, std::string("cannot open corpus '") + path + "'");
    *out = new lg_records{loggrouper::parse_structured(in).records};
  });
}

lg_status lg_records_save(const lg_records* records, const char* path) {
  return guard([&] {
    require(records, "records");
    require(path, "path");
    std::ofstream out(path, std::ios::binary);
    loggrouper::write_structured(out, records->records);
    out.close();
    if (!out) throw Error(ErrorCode::Io, std::string("cannot write '") + path + "'");
  });
}

size_t lg_records_size(const lg_records* records) {
  return records ? records->records.size() : 0;
}

void lg_records_free(lg_records* records) { delete records; }

lg_status lg_run_execute(const lg_records* records, const char* config_json, lg_run** out) {
  return guard([&] {
    require(records, "records");
    require(out, "out");
    const auto config = config_json ? loggrouper::run_config_from_json(config_json)
                                    : loggrouper::RunConfig{};
    auto run = std::make_unique<lg_run>();
    run->run = loggrouper::run_pipeline(records->records, config);
    run->run.run_id = loggrouper::content_run_id(run->run.corpus, config);
    *out = run.release();
  });
}

const char* lg_run_status(const lg_run* run) {
  return run ? loggrouper::to_string(run->run.status).data() : "";
}

lg_status lg_run_persist(const lg_run* run, const char* dir) {
  return guard([&] {
    require(run, "run");
    require(dir, "dir");
    auto [root, name] = split_dir(dir);
    loggrouper::PipelineRun copy = run->run;
    copy.run_id = name;
    loggrouper::persist_run(copy, root);
  });
}

lg_status lg_run_load(const char* dir, lg_run** out) {
  return guard([&] {
    require(dir, "dir");
    require(out, "out");
    auto [root, name] = split_dir(dir);
    *out = new lg_run{loggrouper::load_run(name, root)};
  });
}

lg_status lg_run_report(const lg_run* run, const char* format, char** out) {
  return guard([&] {
    require(run, "run");
    require(out, "out");
    const auto f = loggrouper::parse_report_format(format ? format : "table");
    *out = dup(loggrouper::render_report(run->run, f));
  });
}

lg_status lg_run_best(const lg_run* run, char** combo, int* k) {
  return guard([&] {
    require(run, "run");
    const auto* best = run->run.best();
    if (!best) throw Error(ErrorCode::NotReady, "run has no best combo");
    if (k) *k = best->assignment.k;
    if (combo) *combo = dup(loggrouper::combo_key(best->combo));
  });
}

lg_status lg_run_artifact(const lg_run* run, const char* name, char** out) {
  return guard([&] {
    require(run, "run");
    require(name, "name");
    require(out, "out");
    const std::string n = name;
    if (n == "manifest") *out = dup(loggrouper::manifest_json(run->run));
    else if (n == "report") *out = dup(loggrouper::report_json(run->run));
    else if (n == "assignments") *out = dup(loggrouper::assignments_json(run->run));
    else if (n == "clouds") *out = dup(loggrouper::clouds_json(run->run));
    else throw Error(ErrorCode::InvalidArgument, "unknown artifact '" + n + "'");
  });
}

void lg_run_free(lg_run* run) { delete run; }

lg_status lg_serve(const char* config_path) {
  return guard([&] {
    auto config = config_path ? loggrouper::ServiceConfig::load(config_path)
                              : loggrouper::ServiceConfig{};
    config.apply_environment();
    loggrouper::serve(config);
  });
}

}  // extern "C"
