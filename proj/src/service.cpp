#include "loggrouper/service.hpp"

#include <algorithm>
#include <condition_variable>
#include <csignal>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <pthread.h>

#include "json_codec.hpp"
#include "loggrouper/error.hpp"
#include "loggrouper/pipeline.hpp"

// After the Eigen headers: httplib pulls in <resolv.h>, whose _res macro
// collides with Eigen parameter names.
#include "httplib.h"

namespace loggrouper {
namespace {

namespace fs = std::filesystem;
using codec::json;

struct ApiError {
  int status;
  std::string code;
  std::string message;
};

ApiError api_error(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Parse:
    case ErrorCode::EmptyData:
      return {400, "invalid_config", e.what()};
    case ErrorCode::NotFound: return {404, "not_found", e.what()};
    case ErrorCode::NotReady: return {409, "not_ready", e.what()};
    case ErrorCode::Exists: return {409, "conflict", e.what()};
    case ErrorCode::Unavailable:
    case ErrorCode::Io:
      return {503, "provider_unavailable", e.what()};
    default: return {500, "internal", e.what()};
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, const ApiError& e) {
  send_json(res, e.status, {{"error", {{"code", e.code}, {"message", e.message}}}});
}

bool safe_name(const std::string& s) {
  return !s.empty() && s[0] != '.' && s.find('/') == std::string::npos &&
         s.find('\\') == std::string::npos;
}

std::string random_run_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t query_size(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const auto v = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size() || n < 0) throw std::invalid_argument(name);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("query parameter '") + name +
                                                "' must be a non-negative integer");
  }
}

}  // namespace

ServiceConfig ServiceConfig::parse(std::string_view json_text) {
  ServiceConfig c;
  try {
    const auto j = json::parse(json_text);
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "service config must be a JSON object");
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.artifact_root = j.value("artifact_root", c.artifact_root);
    c.corpus_root = j.value("corpus_root", c.corpus_root);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("invalid service config: ") + e.what());
  }
  return c;
}

ServiceConfig ServiceConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read service config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ServiceConfig::apply_environment() {
  if (const char* v = std::getenv("LOGGROUPER_HOST")) host = v;
  if (const char* v = std::getenv("LOGGROUPER_PORT")) {
    char* end = nullptr;
    const long p = std::strtol(v, &end, 10);
    if (end == v || *end != '\0')
      throw Error(ErrorCode::InvalidArgument, std::string("LOGGROUPER_PORT is not a number: ") + v);
    port = static_cast<int>(p);
  }
  if (const char* v = std::getenv("LOGGROUPER_ARTIFACT_ROOT")) artifact_root = v;
  if (const char* v = std::getenv("LOGGROUPER_CORPUS_ROOT")) corpus_root = v;
}

struct Service::Impl {
  struct Entry {
    RunStatus status = RunStatus::Pending;
    std::shared_ptr<const PipelineRun> run;  // set once finished
    std::vector<LogRecord> records;           // input, until the run executes
    RunConfig config;
    std::string failure;
  };

  ServiceConfig config;
  httplib::Server server;
  int bound_port = -1;

  std::mutex mu;
  std::condition_variable changed;
  std::map<std::string, Entry> runs;
  std::map<std::string, std::string> idempotency;
  std::map<std::string, LogRecord> records;
  std::set<std::string> indexed_dirs;
  std::deque<std::string> queue;
  bool stopping = false;
  std::jthread worker;

  explicit Impl(ServiceConfig c) : config(std::move(c)) {
    routes();
    worker = std::jthread([this] { work(); });
  }

  ~Impl() {
    {
      std::lock_guard lock(mu);
      stopping = true;
    }
    changed.notify_all();
    server.stop();
  }

  void index_records(const std::vector<LogRecord>& recs) {
    for (const auto& r : recs) records.insert_or_assign(r.id, r);
  }

  void work() {
    for (;;) {
      std::string id;
      std::vector<LogRecord> input;
      RunConfig cfg;
      {
        std::unique_lock lock(mu);
        changed.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
        auto& e = runs.at(id);
        e.status = RunStatus::Running;
        input = std::move(e.records);
        cfg = e.config;
      }
      changed.notify_all();

      auto run = std::make_shared<PipelineRun>();
      try {
        RunResources res;
        res.threads = config.threads;
        *run = run_pipeline(input, cfg, res);
      } catch (const std::exception& ex) {
        run->config = cfg;
        run->status = RunStatus::Failed;
        run->failure_reasons = {ex.what()};
      }
      run->run_id = id;
      std::string failure;
      try {
        persist_run(*run, config.artifact_root);
      } catch (const std::exception& ex) {
        failure = std::string("could not persist run: ") + ex.what();
      }
      {
        std::lock_guard lock(mu);
        auto& e = runs.at(id);
        e.run = run;
        e.status = failure.empty() ? run->status : RunStatus::Failed;
        e.failure = failure;
        index_records(run->corpus.records);
      }
      changed.notify_all();
    }
  }

  // Caller holds mu. Loads persisted runs on first access.
  Entry& find_run(const std::string& id) {
    if (auto it = runs.find(id); it != runs.end()) return it->second;
    if (!safe_name(id)) throw Error(ErrorCode::NotFound, "unknown run '" + id + "'");
    auto loaded = std::make_shared<PipelineRun>(load_run(id, config.artifact_root));
    Entry e;
    e.status = loaded->status;
    e.config = loaded->config;
    index_records(loaded->corpus.records);
    e.run = std::move(loaded);
    indexed_dirs.insert(id);
    return runs.emplace(id, std::move(e)).first->second;
  }

  // Caller holds mu.
  const LogRecord* find_record(const std::string& id) {
    if (auto it = records.find(id); it != records.end()) return &it->second;
    std::error_code ec;
    for (const auto& dir : fs::directory_iterator(config.artifact_root, ec)) {
      const auto name = dir.path().filename().string();
      if (!dir.is_directory() || !safe_name(name) || indexed_dirs.count(name)) continue;
      indexed_dirs.insert(name);
      try {
        index_records(parse_structured(read_text(dir.path() / "corpus.jsonl")).records);
      } catch (const std::exception&) {
        continue;
      }
      if (auto it = records.find(id); it != records.end()) return &it->second;
    }
    return nullptr;
  }

  std::vector<LogRecord> resolve_corpus(const json& body) {
    if (body.contains("corpus_jsonl")) {
      try {
        return parse_structured(body["corpus_jsonl"].get<std::string>()).records;
      } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("corpus_jsonl: ") + e.what());
      }
    }
    if (!body.contains("corpus") || !body["corpus"].is_string())
      throw Error(ErrorCode::InvalidArgument, "request needs 'corpus' or 'corpus_jsonl'");
    const auto name = body["corpus"].get<std::string>();
    const fs::path path = fs::path(config.corpus_root) / (name + ".jsonl");
    if (config.corpus_root.empty() || !safe_name(name) || !fs::is_regular_file(path))
      throw Error(ErrorCode::NotFound, "unknown corpus '" + name + "'");
    return parse_structured(read_text(path)).records;
  }

  void post_run(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
    }
    if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be an object");
    const RunConfig cfg = codec::config_from_json(body.value("config", json::object()));
    std::string key = req.get_header_value("Idempotency-Key");
    if (key.empty() && body.contains("idempotency_key"))
      key = body["idempotency_key"].get<std::string>();

    // Fail fast on external resources the run could never reach.
    try {
      if (cfg.provider) make_embedding_provider(*cfg.provider);
      if (cfg.word_vectors && !fs::is_regular_file(*cfg.word_vectors))
        throw Error(ErrorCode::Unavailable, "word-vector file '" + *cfg.word_vectors + "' not found");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Unavailable || e.code() == ErrorCode::Io)
        throw Error(ErrorCode::Unavailable, e.what());
      throw;
    }
    auto input = resolve_corpus(body);

    std::string id;
    {
      std::lock_guard lock(mu);
      if (!key.empty() && idempotency.count(key)) {
        send_json(res, 409,
                  {{"error", {{"code", "conflict"},
                              {"message", "idempotency key already used"},
                              {"detail", {{"run_id", idempotency[key]}}}}}});
        return;
      }
      do id = random_run_id();
      while (runs.count(id) || fs::exists(fs::path(config.artifact_root) / id));
      if (!key.empty()) idempotency[key] = id;
      index_records(input);
      Entry e;
      e.records = std::move(input);
      e.config = cfg;
      runs.emplace(id, std::move(e));
      queue.push_back(id);
    }
    changed.notify_all();
    send_json(res, 202, {{"run_id", id}, {"status", "pending"}});
  }

  void get_run(const std::string& id, httplib::Response& res) {
    std::lock_guard lock(mu);
    auto& e = find_run(id);
    json body;
    body["run_id"] = id;
    body["status"] = std::string(to_string(e.status));
    if (e.run) {
      if (e.status == RunStatus::Done && e.run->report) {
        body["report"] = codec::to_json(*e.run->report);
        body["best_combo"] = body["report"]["best_combo"];
        if (const auto* best = e.run->best()) body["k"] = best->assignment.k;
      }
      body["records"] = e.run->corpus.records.size();
      auto reasons = e.run->failure_reasons;
      if (!e.failure.empty()) reasons.push_back(e.failure);
      if (!reasons.empty()) body["failure_reasons"] = reasons;
    }
    send_json(res, 200, body);
  }

  // Caller holds mu.
  std::shared_ptr<const PipelineRun> done_run(const std::string& id) {
    auto& e = find_run(id);
    if (e.status != RunStatus::Done || !e.run)
      throw Error(ErrorCode::NotReady, "run '" + id + "' is " + std::string(to_string(e.status)));
    if (!e.run->best()) throw Error(ErrorCode::Internal, "run '" + id + "' has no best combo");
    return e.run;
  }

  void get_groups(const httplib::Request& req, const std::string& id, httplib::Response& res) {
    std::shared_ptr<const PipelineRun> run;
    {
      std::lock_guard lock(mu);
      run = done_run(id);
    }
    const std::size_t limit = query_size(req, "limit", std::numeric_limits<std::size_t>::max());
    const std::size_t offset = query_size(req, "offset", 0);
    const auto& best = *run->best();
    std::map<int, std::vector<std::string>> members;
    for (std::size_t i = 0; i < best.assignment.labels.size(); ++i)
      members[best.assignment.labels[i]].push_back(run->corpus.records[i].id);
    std::vector<std::pair<int, std::vector<std::string>>> ordered(members.begin(), members.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if ((a.first == kNoise) != (b.first == kNoise)) return b.first == kNoise;
      return a.second.size() > b.second.size();
    });
    json groups = json::array();
    for (const auto& [label, ids] : ordered) {
      json phrases = json::array();
      for (const auto& c : run->clouds)
        if (c.cluster_label == label)
          for (std::size_t i = 0; i < c.phrases.size() && i < 5; ++i) phrases.push_back(c.phrases[i].text);
      const auto first = std::min(offset, ids.size());
      const auto last = first + std::min(limit, ids.size() - first);
      groups.push_back({{"cluster", label},
                        {"size", ids.size()},
                        {"noise", label == kNoise},
                        {"member_ids", std::vector<std::string>(ids.begin() + first, ids.begin() + last)},
                        {"top_phrases", std::move(phrases)}});
    }
    send_json(res, 200,
              {{"run_id", id}, {"combo", combo_key(best.combo)}, {"groups", std::move(groups)}});
  }

  void get_wordcloud(const std::string& id, const std::string& group, httplib::Response& res) {
    std::shared_ptr<const PipelineRun> run;
    {
      std::lock_guard lock(mu);
      run = done_run(id);
    }
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(group, &used);
      if (used != group.size()) throw std::invalid_argument(group);
    } catch (const std::exception&) {
      throw Error(ErrorCode::NotFound, "unknown group '" + group + "'");
    }
    for (const auto& c : run->clouds)
      if (c.cluster_label == label) return send_json(res, 200, codec::to_json(c));
    throw Error(ErrorCode::NotFound, "unknown group '" + group + "'");
  }

  void get_log(const std::string& id, httplib::Response& res) {
    std::lock_guard lock(mu);
    const LogRecord* r = find_record(id);
    if (!r) throw Error(ErrorCode::NotFound, "unknown record '" + id + "'");
    send_json(res, 200, codec::to_json(*r));
  }

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, api_error(e));
      } catch (const std::exception& e) {
        send_error(res, {500, "internal", e.what()});
      }
    };
  }

  void routes() {
    server.Post("/api/v1/runs", guarded([this](const auto& req, auto& res) { post_run(req, res); }));
    server.Get(R"(/api/v1/runs/([^/]+))",
               guarded([this](const auto& req, auto& res) { get_run(req.matches[1], res); }));
    server.Get(R"(/api/v1/runs/([^/]+)/groups)", guarded([this](const auto& req, auto& res) {
                 get_groups(req, req.matches[1], res);
               }));
    server.Get(R"(/api/v1/runs/([^/]+)/groups/([^/]+)/wordcloud)",
               guarded([this](const auto& req, auto& res) {
                 get_wordcloud(req.matches[1], req.matches[2], res);
               }));
    server.Get(R"(/api/v1/logs/(.+))",
               guarded([this](const auto& req, auto& res) { get_log(req.matches[1], res); }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.status == 404 && res.body.empty())
        send_error(res, {404, "not_found", "no such endpoint"});
    });
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() = default;

int Service::bind() {
  std::error_code ec;
  fs::create_directories(impl_->config.artifact_root, ec);
  if (ec || !fs::is_directory(impl_->config.artifact_root))
    throw Error(ErrorCode::Io, "cannot create artifact root '" + impl_->config.artifact_root + "'");
  const auto& c = impl_->config;
  if (c.port < 0 || c.port > 65535)
    throw Error(ErrorCode::Unavailable, "cannot bind port " + std::to_string(c.port));
  // httplib's default also sets SO_REUSEPORT, which would let a second
  // instance share the port silently.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });
  if (c.port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(c.host);
    if (impl_->bound_port < 0) throw Error(ErrorCode::Unavailable, "cannot bind " + c.host);
  } else {
    if (!impl_->server.bind_to_port(c.host, c.port))
      throw Error(ErrorCode::Unavailable,
                  "cannot bind " + c.host + ":" + std::to_string(c.port));
    impl_->bound_port = c.port;
  }
  return impl_->bound_port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

int Service::port() const { return impl_->bound_port; }

bool Service::wait_for(const std::string& run_id, std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mu);
  return impl_->changed.wait_for(lock, timeout, [&] {
    auto it = impl_->runs.find(run_id);
    return it != impl_->runs.end() && it->second.status != RunStatus::Pending &&
           it->second.status != RunStatus::Running;
  });
}

void serve(const ServiceConfig& config) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(config);
  service.bind();
  std::jthread watcher([&service, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.listen();
  // listen() can also return on its own; wake the watcher so it can exit.
  pthread_kill(watcher.native_handle(), SIGTERM);
}

}  // namespace loggrouper
