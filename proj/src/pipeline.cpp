#include "loggrouper/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "json_codec.hpp"
#include "loggrouper/error.hpp"

namespace loggrouper {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned t = 0; t < threads; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

struct Variant {
  VectorizerTag vectorizer;
  bool preprocessed;
};

struct Texts {
  std::vector<std::string> ids;
  std::vector<std::string> raw;
  std::vector<std::string> preprocessed;
};

FeatureMatrix vectorize_variant(const Variant& v, const Texts& texts, const RunConfig& config,
                                const RunResources& resources) {
  const auto& docs = v.preprocessed ? texts.preprocessed : texts.raw;
  switch (v.vectorizer) {
    case VectorizerTag::Tfidf: {
      TfidfOptions options;
      options.min_df = config.min_df;
      const auto model = fit_tfidf(docs, options);
      auto sparse = transform_tfidf(model, docs, texts.ids);
      sparse.preprocessed = v.preprocessed;
      PcaOptions pca;
      pca.variance_target = config.pca_variance;
      pca.max_components = config.pca_max_dims;
      return apply_pca(fit_pca(sparse, pca), sparse, VectorizerTag::Tfidf);
    }
    case VectorizerTag::FastText: {
      if (!resources.word_vectors)
        throw Error(ErrorCode::Unavailable, "no word-vector table configured");
      std::vector<std::vector<std::string>> tokens;
      tokens.reserve(docs.size());
      for (const auto& d : docs) tokens.push_back(tokenize(d));
      auto m = embed_average(*resources.word_vectors, tokens, texts.ids);
      m.preprocessed = v.preprocessed;
      if (config.normalize_embeddings) l2_normalize_rows(m);
      return m;
    }
    case VectorizerTag::External: {
      if (!resources.provider)
        throw Error(ErrorCode::Unavailable, "no external embedding provider configured");
      auto m = embed_external(*resources.provider, texts.ids, docs, v.preprocessed);
      if (config.normalize_embeddings) l2_normalize_rows(m);
      return m;
    }
  }
  throw Error(ErrorCode::Internal, "unhandled vectorizer");
}

ComboResult cluster_combo(const Combo& combo, const FeatureMatrix& matrix,
                          const RunConfig& config, const std::vector<int>& k_range,
                          QualityScore& score) {
  ComboResult result;
  result.combo = combo;
  score.combo = combo;
  const auto n = static_cast<int>(matrix.size());
  if (combo.algorithm == Algorithm::DBSCAN) {
    const int min_samples =
        std::min(default_min_samples(static_cast<int>(matrix.dims())), n - 1);
    const double eps = greedy_eps(matrix, min_samples);
    result.assignment = dbscan(matrix, eps, min_samples);
  } else {
    auto elbow = elbow_select_k(matrix, k_range, combo.algorithm, config.seed, config.linkage);
    result.assignment = std::move(elbow.assignment);
    result.elbow = std::move(elbow.curve);
  }
  score.sc = silhouette(matrix, result.assignment);
  score.ch = calinski_harabasz(matrix, result.assignment);
  score.n_clusters = result.assignment.k;
  score.noise_fraction =
      static_cast<double>(result.assignment.noise_count()) / static_cast<double>(n);
  result.ok = true;
  return result;
}

}  // namespace

std::string_view to_string(PreprocessMode mode) noexcept {
  switch (mode) {
    case PreprocessMode::Raw: return "raw";
    case PreprocessMode::Preprocessed: return "preprocessed";
    case PreprocessMode::Both: return "both";
  }
  return "both";
}

std::string_view to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::Pending: return "pending";
    case RunStatus::Running: return "running";
    case RunStatus::Done: return "done";
    case RunStatus::Failed: return "failed";
  }
  return "pending";
}

PreprocessMode parse_preprocess_mode(std::string_view name) {
  if (name == "raw") return PreprocessMode::Raw;
  if (name == "preprocessed") return PreprocessMode::Preprocessed;
  if (name == "both") return PreprocessMode::Both;
  throw Error(ErrorCode::InvalidArgument, "unknown preprocessing mode '" + std::string(name) + "'");
}

RunStatus parse_run_status(std::string_view name) {
  if (name == "pending") return RunStatus::Pending;
  if (name == "running") return RunStatus::Running;
  if (name == "done") return RunStatus::Done;
  if (name == "failed") return RunStatus::Failed;
  throw Error(ErrorCode::Parse, "unknown run status '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (vectorizers.empty()) fail("vectorizers: at least one vectorizer is required");
  if (clusterers.empty()) fail("clusterers: at least one clusterer is required");
  if (!(window.from < window.to)) fail("window: 'from' must precede 'to'");
  for (int k : k_range)
    if (k < 2) fail("k_range: values must be >= 2");
  if (!(pca_variance > 0.0 && pca_variance <= 1.0)) fail("pca_variance: must lie in (0, 1]");
  if (pca_max_dims < 1) fail("pca_max_dims: must be positive");
  if (min_df < 1) fail("min_df: must be positive");
  if (top_n < 1) fail("top_n: must be positive");
}

std::vector<Combo> RunConfig::combos() const {
  std::set<Combo> out;
  for (auto v : vectorizers)
    for (bool pre : {false, true}) {
      if (pre && preprocessing == PreprocessMode::Raw) continue;
      if (!pre && preprocessing == PreprocessMode::Preprocessed) continue;
      for (auto a : clusterers) out.insert(Combo{v, pre, a});
    }
  return {out.begin(), out.end()};
}

RunConfig run_config_from_json(std::string_view json_text) {
  codec::json j;
  try {
    j = codec::json::parse(json_text);
  } catch (const codec::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  return codec::config_from_json(j);
}

std::string run_config_to_json(const RunConfig& config) {
  return codec::to_json(config).dump(2);
}

const ComboResult* PipelineRun::best() const {
  if (!report || !report->best_combo) return nullptr;
  for (const auto& c : combos)
    if (c.combo == *report->best_combo) return &c;
  return nullptr;
}

PipelineRun run_matrix(const Corpus& corpus, const RunConfig& config,
                       const RunResources& resources) {
  config.validate();
  const auto n = static_cast<int>(corpus.records.size());
  std::vector<int> k_range = config.k_range;
  if (k_range.empty())
    for (int k = 2; k <= std::min(15, n - 1); ++k) k_range.push_back(k);
  const int min_k = k_range.empty() ? 2 : *std::min_element(k_range.begin(), k_range.end());
  if (n < std::max(3, min_k))
    throw Error(ErrorCode::EmptyData, "corpus has " + std::to_string(n) +
                                          " records; the run needs at least " +
                                          std::to_string(std::max(3, min_k)));

  PipelineRun run;
  run.config = config;
  run.corpus = corpus;
  run.status = RunStatus::Running;

  const auto preprocessor =
      resources.preprocessor ? resources.preprocessor : std::make_shared<const Preprocessor>();

  auto start = Clock::now();
  Texts texts;
  std::vector<std::string> summary_texts;
  for (const auto& r : corpus.records) {
    texts.ids.push_back(r.id);
    texts.raw.push_back(r.message);
    const auto doc = preprocessor->run(r.id, r.message, {.lemmatize = true, .remove_stopwords = false});
    texts.preprocessed.push_back(join(doc.tokens));
  }
  run.timings_ms.emplace_back("preprocess", elapsed_ms(start));

  // Resolve the optional vectorizer resources up front so every combo of a
  // missing resource fails with the same reason.
  RunResources res = resources;
  std::string word_vector_error, provider_error;
  if (!res.word_vectors && config.word_vectors) {
    try {
      res.word_vectors = std::make_shared<const WordVectorTable>(
          load_word_vectors_file(*config.word_vectors).table);
    } catch (const Error& e) {
      word_vector_error = e.what();
    }
  }
  if (!res.provider && config.provider) {
    try {
      res.provider = make_embedding_provider(*config.provider);
    } catch (const Error& e) {
      provider_error = e.what();
    }
  }

  const auto combos = config.combos();
  std::vector<Variant> variants;
  for (const auto& c : combos)
    if (variants.empty() || variants.back().vectorizer != c.vectorizer ||
        variants.back().preprocessed != c.preprocessed)
      variants.push_back({c.vectorizer, c.preprocessed});

  std::vector<std::optional<FeatureMatrix>> matrices(variants.size());
  std::vector<std::string> variant_errors(variants.size());
  for (std::size_t i = 0; i < variants.size(); ++i) {
    start = Clock::now();
    const auto& v = variants[i];
    try {
      if (v.vectorizer == VectorizerTag::FastText && !word_vector_error.empty())
        throw Error(ErrorCode::Unavailable, word_vector_error);
      if (v.vectorizer == VectorizerTag::External && !provider_error.empty())
        throw Error(ErrorCode::Unavailable, provider_error);
      matrices[i] = vectorize_variant(v, texts, config, res);
    } catch (const std::exception& e) {
      variant_errors[i] = std::string("vectorization failed: ") + e.what();
    }
    run.timings_ms.emplace_back(
        "vectorize:" + std::string(to_string(v.vectorizer)) + (v.preprocessed ? "/preprocessed" : "/raw"),
        elapsed_ms(start));
  }

  std::vector<ComboResult> results(combos.size());
  std::vector<QualityScore> scores(combos.size());
  std::vector<double> combo_ms(combos.size(), 0.0);
  parallel_for(combos.size(), res.threads, [&](std::size_t i) {
    const auto combo_start = Clock::now();
    const Combo& combo = combos[i];
    std::size_t v = 0;
    while (variants[v].vectorizer != combo.vectorizer ||
           variants[v].preprocessed != combo.preprocessed)
      ++v;
    scores[i].combo = combo;
    results[i].combo = combo;
    try {
      if (!matrices[v]) throw Error(ErrorCode::Unavailable, variant_errors[v]);
      results[i] = cluster_combo(combo, *matrices[v], config, k_range, scores[i]);
    } catch (const std::exception& e) {
      results[i].ok = false;
      results[i].reason = e.what();
      results[i].assignment = {};
      scores[i] = QualityScore{};
      scores[i].combo = combo;
      scores[i].valid = false;
      scores[i].reason = e.what();
    }
    combo_ms[i] = elapsed_ms(combo_start);
  });
  for (std::size_t i = 0; i < combos.size(); ++i)
    run.timings_ms.emplace_back("cluster:" + combo_key(combos[i]), combo_ms[i]);
  run.combos = std::move(results);

  const bool any_valid = std::any_of(scores.begin(), scores.end(),
                                     [](const QualityScore& s) { return s.valid; });
  if (!any_valid) {
    run.status = RunStatus::Failed;
    for (const auto& c : run.combos) run.failure_reasons.push_back(combo_key(c.combo) + ": " + c.reason);
    return run;
  }

  run.report = build_report(std::move(scores));
  start = Clock::now();
  if (const ComboResult* best = run.best()) {
    const auto& labels = best->assignment.labels;
    std::vector<int> order;
    for (int l = 0; l < best->assignment.k; ++l) order.push_back(l);
    if (best->assignment.noise_count() > 0) order.push_back(kNoise);
    for (int label : order) {
      std::vector<std::string> member_texts;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) member_texts.push_back(texts.preprocessed[i]);
      run.clouds.push_back(
          wordcloud_data(label, rake_extract(member_texts, preprocessor->stopwords(), config.top_n)));
    }
  }
  run.timings_ms.emplace_back("keyphrase", elapsed_ms(start));
  run.status = RunStatus::Done;
  return run;
}

PipelineRun run_pipeline(const std::vector<LogRecord>& records, const RunConfig& config,
                         const RunResources& resources) {
  config.validate();
  return run_matrix(select_window(records, config.window), config, resources);
}

std::string content_run_id(const Corpus& corpus, const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view data) {
    for (unsigned char c : data) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  mix(write_structured(corpus.records));
  mix(run_config_to_json(config));
  char buf[24];
  std::snprintf(buf, sizeof buf, "run-%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace loggrouper
