#include "loggrouper/vectorize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "loggrouper/error.hpp"

namespace loggrouper {
namespace {

using nlohmann::json;

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

FeatureMatrix make_matrix(const std::vector<std::string>& record_ids, std::size_t n) {
  FeatureMatrix out;
  out.record_ids = record_ids;
  if (out.record_ids.empty())
    for (std::size_t i = 0; i < n; ++i) out.record_ids.push_back(std::to_string(i));
  if (out.record_ids.size() != n)
    throw Error(ErrorCode::InvalidArgument, "record id count does not match document count");
  out.zero_rows.assign(n, false);
  return out;
}

}  // namespace

const Vector* WordVectorTable::find(const std::string& token) const {
  if (auto it = entries.find(token); it != entries.end()) return &it->second;
  if (auto it = entries.find(lowercase(token)); it != entries.end()) return &it->second;
  return nullptr;
}

WordVectorLoad load_word_vectors(std::istream& in) {
  WordVectorLoad out;
  std::string line;
  std::size_t line_no = 0;
  long declared_count = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    if (line_no == 1) {
      long count = 0, dim = 0;
      if (!(fields >> count >> dim) || dim <= 0 || count < 0)
        throw Error(ErrorCode::Parse, "line 1: expected header 'count dim'");
      declared_count = count;
      out.table.dim = static_cast<int>(dim);
      continue;
    }
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    std::string field;
    while (fields >> field) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0' || !std::isfinite(v))
        throw Error(ErrorCode::Parse,
                    "line " + std::to_string(line_no) + ": non-numeric value '" + field + "'");
      values.push_back(v);
    }
    if (values.size() != static_cast<std::size_t>(out.table.dim))
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(out.table.dim) + " values, got " +
                                        std::to_string(values.size()));
    Vector v = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    auto [it, inserted] = out.table.entries.insert_or_assign(token, std::move(v));
    if (!inserted)
      out.warnings.push_back("line " + std::to_string(line_no) + ": duplicate token '" +
                             token + "', keeping the last vector");
  }
  if (line_no == 0) throw Error(ErrorCode::Parse, "empty word-vector file");
  if (declared_count >= 0 && static_cast<std::size_t>(declared_count) != line_no - 1)
    out.warnings.push_back("header declares " + std::to_string(declared_count) +
                           " vectors, file has " + std::to_string(line_no - 1) + " lines");
  return out;
}

WordVectorLoad load_word_vectors(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_word_vectors(in);
}

WordVectorLoad load_word_vectors_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open word-vector file '" + path + "'");
  return load_word_vectors(in);
}

FeatureMatrix embed_average(const WordVectorTable& table,
                            const std::vector<std::vector<std::string>>& tokens_per_doc,
                            const std::vector<std::string>& record_ids) {
  FeatureMatrix out = make_matrix(record_ids, tokens_per_doc.size());
  out.vectorizer = VectorizerTag::FastText;
  out.rows = Matrix::Zero(static_cast<Eigen::Index>(tokens_per_doc.size()), table.dim);
  for (std::size_t i = 0; i < tokens_per_doc.size(); ++i) {
    Vector sum = Vector::Zero(table.dim);
    std::size_t known = 0;
    for (const auto& token : tokens_per_doc[i]) {
      if (const Vector* v = table.find(token)) {
        sum += *v;
        ++known;
      }
    }
    if (known == 0) {
      out.zero_rows[i] = true;
      continue;
    }
    out.rows.row(static_cast<Eigen::Index>(i)) = sum.transpose() / static_cast<double>(known);
  }
  return out;
}

PrecomputedEmbeddings PrecomputedEmbeddings::parse(std::string_view jsonl) {
  PrecomputedEmbeddings out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
      auto id = obj.at("id").get<std::string>();
      auto vec = obj.at("vector").get<std::vector<double>>();
      const bool pre = obj.value("preprocessed", false);
      (pre ? out.preprocessed_ : out.raw_)[std::move(id)] = std::move(vec);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse,
                  "embeddings line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

PrecomputedEmbeddings PrecomputedEmbeddings::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Unavailable, "cannot open embeddings file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Matrix PrecomputedEmbeddings::embed(const std::vector<std::string>& record_ids,
                                    const std::vector<std::string>& texts,
                                    bool preprocessed) const {
  const auto& source = preprocessed ? preprocessed_ : raw_;
  std::size_t found = 0;
  for (const auto& id : record_ids) found += source.count(id);
  if (found != record_ids.size() || record_ids.size() != texts.size())
    throw Error(ErrorCode::InvalidArgument,
                "count mismatch: " + std::to_string(found) + " vectors for " +
                    std::to_string(texts.size()) + " texts");
  if (record_ids.empty()) return Matrix(0, 0);
  const std::size_t dim = source.at(record_ids.front()).size();
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dimension error: empty vector");
  Matrix out(static_cast<Eigen::Index>(record_ids.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < record_ids.size(); ++i) {
    const auto& v = source.at(record_ids[i]);
    if (v.size() != dim)
      throw Error(ErrorCode::InvalidArgument, "dimension error: vector for '" + record_ids[i] +
                                                  "' has " + std::to_string(v.size()) +
                                                  " values, expected " + std::to_string(dim));
    for (std::size_t j = 0; j < dim; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

Matrix HttpEmbeddingProvider::embed(const std::vector<std::string>& /*record_ids*/,
                                    const std::vector<std::string>& texts,
                                    bool /*preprocessed*/) const {
  // Split "http://host:port/prefix" into the client origin and path prefix.
  const auto scheme_end = base_url_.find("://");
  const auto path_start =
      base_url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin =
      path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
  const std::string prefix = path_start == std::string::npos ? "" : base_url_.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  const json body = {{"texts", texts}};
  auto res = client.Post(prefix + "/embed", body.dump(), "application/json");
  if (!res)
    throw Error(ErrorCode::Unavailable, "embedding provider unreachable at " + base_url_);
  if (res->status != 200)
    throw Error(ErrorCode::Unavailable,
                "embedding provider returned HTTP " + std::to_string(res->status));

  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("embedding provider reply: ") + e.what());
  }
  const auto& vectors = reply.at("vectors");
  const std::size_t dim = reply.at("dim").get<std::size_t>();
  if (vectors.size() != texts.size())
    throw Error(ErrorCode::InvalidArgument,
                "count mismatch: provider returned " + std::to_string(vectors.size()) +
                    " vectors for " + std::to_string(texts.size()) + " texts");
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dimension error: dim is zero");
  Matrix out(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (!vectors[i].is_array() || vectors[i].size() != dim)
      throw Error(ErrorCode::InvalidArgument,
                  "dimension error: vector " + std::to_string(i) + " does not have " +
                      std::to_string(dim) + " values");
    for (std::size_t j = 0; j < dim; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          vectors[i][j].get<double>();
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const std::string& locator) {
  if (locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0)
    return std::make_unique<HttpEmbeddingProvider>(locator);
  return std::make_unique<PrecomputedEmbeddings>(PrecomputedEmbeddings::load(locator));
}

FeatureMatrix embed_external(const EmbeddingProvider& provider,
                             const std::vector<std::string>& record_ids,
                             const std::vector<std::string>& texts, bool preprocessed) {
  FeatureMatrix out = make_matrix(record_ids, texts.size());
  out.vectorizer = VectorizerTag::External;
  out.preprocessed = preprocessed;
  out.rows = provider.embed(out.record_ids, texts, preprocessed);
  if (out.rows.rows() != static_cast<Eigen::Index>(texts.size()))
    throw Error(ErrorCode::InvalidArgument, "count mismatch from embedding provider");
  if (!out.rows.allFinite())
    throw Error(ErrorCode::InvalidArgument, "embedding provider returned non-finite values");
  for (Eigen::Index i = 0; i < out.rows.rows(); ++i)
    out.zero_rows[static_cast<std::size_t>(i)] = out.rows.row(i).squaredNorm() == 0.0;
  return out;
}

void l2_normalize_rows(FeatureMatrix& matrix) {
  for (Eigen::Index i = 0; i < matrix.rows.rows(); ++i) {
    const double norm = matrix.rows.row(i).norm();
    if (norm > 0.0) matrix.rows.row(i) /= norm;
  }
}

}  // namespace loggrouper
