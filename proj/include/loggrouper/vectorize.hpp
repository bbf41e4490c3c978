#pragma once

#include <istream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace loggrouper {

enum class VectorizerTag { Tfidf, FastText, External };

std::string_view to_string(VectorizerTag tag) noexcept;
VectorizerTag parse_vectorizer(std::string_view name);

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct FeatureMatrix {
  std::vector<std::string> record_ids;
  Matrix rows;  // n x dims
  VectorizerTag vectorizer = VectorizerTag::Tfidf;
  bool preprocessed = false;
  std::vector<bool> zero_rows;  // rows with no usable content

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index dims() const { return rows.cols(); }
};

// Pre-reduction tf-idf output; columns follow TfidfModel::vocabulary.
struct TfidfMatrix {
  std::vector<std::string> record_ids;
  SparseRows rows;
  bool preprocessed = false;
  std::vector<bool> zero_rows;
};

struct TfidfOptions {
  int ngram_min = 1;
  int ngram_max = 3;
  int min_df = 1;
};

struct TfidfModel {
  std::map<std::string, int> vocabulary;  // column index = lexicographic rank
  std::vector<double> idf;
  int ngram_min = 1;
  int ngram_max = 3;
  std::size_t documents = 0;
};

// Whitespace tokens of `text` expanded into word n-grams joined by one space.
std::vector<std::string> word_ngrams(std::string_view text, int ngram_min, int ngram_max);

// idf(t) = ln((1 + N) / (1 + df(t))) + 1, raw counts, L2-normalized rows.
TfidfModel fit_tfidf(const std::vector<std::string>& texts, const TfidfOptions& options = {});
TfidfMatrix transform_tfidf(const TfidfModel& model, const std::vector<std::string>& texts,
                            const std::vector<std::string>& record_ids = {});
FeatureMatrix to_dense(const TfidfMatrix& matrix);

struct PcaOptions {
  enum class Route { Auto, Covariance, Gram };
  double variance_target = 0.95;
  int max_components = 100;
  Route route = Route::Auto;
};

struct PcaModel {
  Vector mean;
  Matrix components;  // k x dims, orthonormal rows
  std::vector<double> explained_variance;
  std::vector<double> explained_variance_ratio;
  double total_variance = 0.0;

  Eigen::Index rank() const { return components.rows(); }
};

PcaModel fit_pca(const FeatureMatrix& matrix, const PcaOptions& options = {});
PcaModel fit_pca(const TfidfMatrix& matrix, const PcaOptions& options = {});
FeatureMatrix apply_pca(const PcaModel& model, const FeatureMatrix& matrix);
FeatureMatrix apply_pca(const PcaModel& model, const TfidfMatrix& matrix,
                        VectorizerTag tag = VectorizerTag::Tfidf);
// Back-projection into the original space (projected * components + mean).
Matrix reconstruct(const PcaModel& model, const Matrix& projected);

struct WordVectorTable {
  int dim = 0;
  std::unordered_map<std::string, Vector> entries;

  const Vector* find(const std::string& token) const;
};

struct WordVectorLoad {
  WordVectorTable table;
  std::vector<std::string> warnings;
};

WordVectorLoad load_word_vectors(std::istream& in);
WordVectorLoad load_word_vectors(std::string_view text);
WordVectorLoad load_word_vectors_file(const std::string& path);

// Mean of in-vocabulary token vectors. Lookup tries the token as given and
// then lowercased; all-OOV and empty documents become flagged zero rows.
FeatureMatrix embed_average(const WordVectorTable& table,
                            const std::vector<std::vector<std::string>>& tokens_per_doc,
                            const std::vector<std::string>& record_ids = {});

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // One row per text, in input order.
  virtual Matrix embed(const std::vector<std::string>& record_ids,
                       const std::vector<std::string>& texts, bool preprocessed) const = 0;
};

// JSONL of {"id": str, "vector": [...], "preprocessed": bool?}; rows are
// looked up by record id, entries without "preprocessed" serve raw text.
class PrecomputedEmbeddings final : public EmbeddingProvider {
 public:
  static PrecomputedEmbeddings parse(std::string_view jsonl);
  static PrecomputedEmbeddings load(const std::string& path);

  Matrix embed(const std::vector<std::string>& record_ids,
               const std::vector<std::string>& texts, bool preprocessed) const override;

 private:
  std::map<std::string, std::vector<double>> raw_;
  std::map<std::string, std::vector<double>> preprocessed_;
};

// POST {base}/embed with {"texts": [...]} -> {"dim": d, "vectors": [[...], ...]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(std::string base_url, int timeout_seconds = 30);

  Matrix embed(const std::vector<std::string>& record_ids,
               const std::vector<std::string>& texts, bool preprocessed) const override;

 private:
  std::string base_url_;
  int timeout_seconds_;
};

// "http://..." selects the HTTP provider, anything else is a precomputed file.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const std::string& locator);

FeatureMatrix embed_external(const EmbeddingProvider& provider,
                             const std::vector<std::string>& record_ids,
                             const std::vector<std::string>& texts, bool preprocessed);

void l2_normalize_rows(FeatureMatrix& matrix);

}  // namespace loggrouper
