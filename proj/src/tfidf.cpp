#include <cmath>
#include <set>

#include "loggrouper/error.hpp"
#include "loggrouper/preprocess.hpp"
#include "loggrouper/vectorize.hpp"

namespace loggrouper {

std::string_view to_string(VectorizerTag tag) noexcept {
  switch (tag) {
    case VectorizerTag::Tfidf: return "tfidf";
    case VectorizerTag::FastText: return "fasttext";
    case VectorizerTag::External: return "external";
  }
  return "tfidf";
}

VectorizerTag parse_vectorizer(std::string_view name) {
  if (name == "tfidf") return VectorizerTag::Tfidf;
  if (name == "fasttext") return VectorizerTag::FastText;
  if (name == "external") return VectorizerTag::External;
  throw Error(ErrorCode::InvalidArgument, "unknown vectorizer '" + std::string(name) + "'");
}

std::vector<std::string> word_ngrams(std::string_view text, int ngram_min, int ngram_max) {
  const auto tokens = tokenize(text);
  std::vector<std::string> grams;
  for (int n = ngram_min; n <= ngram_max; ++n) {
    if (n <= 0) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string g = tokens[i];
      for (int j = 1; j < n; ++j) {
        g += ' ';
        g += tokens[i + j];
      }
      grams.push_back(std::move(g));
    }
  }
  return grams;
}

TfidfModel fit_tfidf(const std::vector<std::string>& texts, const TfidfOptions& options) {
  if (options.ngram_min < 1 || options.ngram_max < options.ngram_min)
    throw Error(ErrorCode::InvalidArgument, "invalid n-gram range");
  std::map<std::string, int> df;
  std::size_t non_empty = 0;
  for (const auto& text : texts) {
    const auto grams = word_ngrams(text, options.ngram_min, options.ngram_max);
    if (!grams.empty()) ++non_empty;
    const std::set<std::string> unique(grams.begin(), grams.end());
    for (const auto& g : unique) ++df[g];
  }
  if (non_empty == 0) throw Error(ErrorCode::Degenerate, "all documents are empty");
  if (non_empty < 2)
    throw Error(ErrorCode::Degenerate, "tf-idf needs at least two non-empty documents");

  TfidfModel model;
  model.ngram_min = options.ngram_min;
  model.ngram_max = options.ngram_max;
  model.documents = texts.size();
  const double n = static_cast<double>(texts.size());
  int column = 0;
  for (const auto& [term, count] : df) {
    if (count < options.min_df) continue;
    model.vocabulary.emplace(term, column++);
    model.idf.push_back(std::log((1.0 + n) / (1.0 + count)) + 1.0);
  }
  if (model.vocabulary.empty())
    throw Error(ErrorCode::Degenerate, "no term reaches min_df");
  return model;
}

TfidfMatrix transform_tfidf(const TfidfModel& model, const std::vector<std::string>& texts,
                            const std::vector<std::string>& record_ids) {
  TfidfMatrix out;
  out.record_ids = record_ids;
  if (out.record_ids.empty())
    for (std::size_t i = 0; i < texts.size(); ++i) out.record_ids.push_back(std::to_string(i));
  if (out.record_ids.size() != texts.size())
    throw Error(ErrorCode::InvalidArgument, "record id count does not match text count");

  std::vector<Eigen::Triplet<double>> triplets;
  out.zero_rows.assign(texts.size(), false);
  for (std::size_t row = 0; row < texts.size(); ++row) {
    std::map<int, double> counts;
    for (const auto& g : word_ngrams(texts[row], model.ngram_min, model.ngram_max)) {
      auto it = model.vocabulary.find(g);
      if (it != model.vocabulary.end()) counts[it->second] += 1.0;
    }
    double norm2 = 0.0;
    for (auto& [col, v] : counts) {
      v *= model.idf[static_cast<std::size_t>(col)];
      norm2 += v * v;
    }
    if (norm2 == 0.0) {
      out.zero_rows[row] = true;
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (const auto& [col, v] : counts)
      triplets.emplace_back(static_cast<int>(row), col, v * inv);
  }
  out.rows.resize(static_cast<Eigen::Index>(texts.size()),
                  static_cast<Eigen::Index>(model.vocabulary.size()));
  out.rows.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

FeatureMatrix to_dense(const TfidfMatrix& matrix) {
  FeatureMatrix out;
  out.record_ids = matrix.record_ids;
  out.rows = Matrix(matrix.rows);
  out.vectorizer = VectorizerTag::Tfidf;
  out.preprocessed = matrix.preprocessed;
  out.zero_rows = matrix.zero_rows;
  return out;
}

}  // namespace loggrouper
