#pragma once

#include <chrono>
#include <memory>
#include <string>

namespace loggrouper {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string artifact_root = "artifacts";
  std::string corpus_root;  // named corpora live here as <name>.jsonl
  unsigned threads = 0;     // per-run combo parallelism

  // JSON object with any of the fields above.
  static ServiceConfig parse(std::string_view json_text);
  static ServiceConfig load(const std::string& path);
  // LOGGROUPER_HOST, LOGGROUPER_PORT, LOGGROUPER_ARTIFACT_ROOT, LOGGROUPER_CORPUS_ROOT.
  void apply_environment();
};

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Creates the artifact root and binds the socket. Throws Unavailable when
  // the address cannot be bound and Io when the root cannot be created.
  int bind();
  // Serves until stop(); bind() must have succeeded.
  void listen();
  void stop();
  int port() const;

  // Blocks until the run has left pending/running or the timeout elapses.
  bool wait_for(const std::string& run_id, std::chrono::milliseconds timeout);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// bind + listen, returning after SIGINT or SIGTERM.
void serve(const ServiceConfig& config);

}  // namespace loggrouper
