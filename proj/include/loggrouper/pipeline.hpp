#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "loggrouper/cluster.hpp"
#include "loggrouper/ingest.hpp"
#include "loggrouper/keyphrase.hpp"
#include "loggrouper/preprocess.hpp"
#include "loggrouper/quality.hpp"
#include "loggrouper/vectorize.hpp"

namespace loggrouper {

enum class PreprocessMode { Raw, Preprocessed, Both };
enum class RunStatus { Pending, Running, Done, Failed };

std::string_view to_string(PreprocessMode mode) noexcept;
std::string_view to_string(RunStatus status) noexcept;
PreprocessMode parse_preprocess_mode(std::string_view name);
RunStatus parse_run_status(std::string_view name);

struct RunConfig {
  WindowSpec window;
  std::vector<VectorizerTag> vectorizers{VectorizerTag::Tfidf};
  std::vector<Algorithm> clusterers{Algorithm::KMeans, Algorithm::Agglomerative,
                                    Algorithm::DBSCAN, Algorithm::Spectral};
  PreprocessMode preprocessing = PreprocessMode::Both;
  std::uint64_t seed = 42;
  std::vector<int> k_range;  // empty: 2..min(15, n-1)
  std::optional<std::string> provider;      // external embeddings locator
  std::optional<std::string> word_vectors;  // .vec file
  Linkage linkage = Linkage::Ward;
  bool normalize_embeddings = false;
  double pca_variance = 0.95;
  int pca_max_dims = 100;
  int min_df = 1;
  int top_n = 15;

  // Throws InvalidArgument naming the offending field.
  void validate() const;
  std::vector<Combo> combos() const;
};

RunConfig run_config_from_json(std::string_view json_text);
std::string run_config_to_json(const RunConfig& config);

struct ComboResult {
  Combo combo;
  bool ok = false;
  std::string reason;
  ClusterAssignment assignment;
  std::optional<ElbowCurve> elbow;
};

struct PipelineRun {
  std::string run_id;
  RunConfig config;
  RunStatus status = RunStatus::Pending;
  Corpus corpus;
  std::optional<QualityReport> report;  // present iff Done
  std::vector<ComboResult> combos;      // sorted by combo
  std::vector<KeyphraseCloud> clouds;   // best combo, clusters then noise
  std::vector<std::string> failure_reasons;
  std::vector<std::pair<std::string, double>> timings_ms;

  const ComboResult* best() const;
};

struct RunResources {
  std::shared_ptr<const WordVectorTable> word_vectors;
  std::shared_ptr<const EmbeddingProvider> provider;
  std::shared_ptr<const Preprocessor> preprocessor;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Runs every configured combo; a failing combo is recorded and skipped. The
// returned run is Done when at least one combo scored, Failed otherwise.
// Throws EmptyData when the corpus is below the minimum size.
PipelineRun run_matrix(const Corpus& corpus, const RunConfig& config,
                       const RunResources& resources = {});

// select_window over the config's window followed by run_matrix.
PipelineRun run_pipeline(const std::vector<LogRecord>& records, const RunConfig& config,
                         const RunResources& resources = {});

// Deterministic id derived from the corpus and config.
std::string content_run_id(const Corpus& corpus, const RunConfig& config);

// Writes <root>/<run_id>/ via a temporary directory and a rename; fails with
// Exists when the run directory is already there.
std::string persist_run(const PipelineRun& run, const std::string& root);
PipelineRun load_run(const std::string& run_id, const std::string& root);

// Serialized views of the artifact files, as written by persist_run.
std::string manifest_json(const PipelineRun& run);
std::string report_json(const PipelineRun& run);
std::string assignments_json(const PipelineRun& run);
std::string clouds_json(const PipelineRun& run);

}  // namespace loggrouper
