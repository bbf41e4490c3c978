#pragma once

#include <map>
#include <memory>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace loggrouper {

struct CleanDocument {
  std::string record_id;
  std::string raw;
  std::string cleaned;
  std::vector<std::string> tokens;
  bool empty = false;
};

struct CleanOptions {
  // Matched case-insensitively against the lowercased text and removed.
  std::vector<std::string> timestamp_patterns = default_timestamp_patterns();
  // Symbols kept when they sit inside a token (eth0.100, /usr/bin, if_name).
  std::string keep_inside_token = "._-/";

  static std::vector<std::string> default_timestamp_patterns();
};

class Cleaner {
 public:
  explicit Cleaner(CleanOptions options = {});

  std::string clean(std::string_view message) const;

 private:
  std::string strip_timestamps(std::string text) const;
  std::string strip_symbols(std::string_view text) const;

  CleanOptions options_;
  std::vector<std::regex> timestamp_res_;
};

std::string clean(std::string_view message);
std::vector<std::string> tokenize(std::string_view cleaned);

class Lemmatizer {
 public:
  virtual ~Lemmatizer() = default;
  virtual std::string lemma(std::string_view token) const = 0;

  std::vector<std::string> lemmatize(const std::vector<std::string>& tokens) const;
};

// Exception dictionary first, then suffix rules for plural -s/-es/-ies,
// -ing and -ed. Stems shorter than three characters are never produced and
// tokens carrying digits or path separators are returned untouched.
class RuleLemmatizer final : public Lemmatizer {
 public:
  RuleLemmatizer();
  explicit RuleLemmatizer(std::map<std::string, std::string> exceptions);

  std::string lemma(std::string_view token) const override;

  static std::map<std::string, std::string> default_exceptions();
  // "token<TAB>lemma" per line. Entries that would lengthen or empty a
  // token are rejected.
  static std::map<std::string, std::string> parse_exceptions(std::string_view text);

 private:
  std::map<std::string, std::string> exceptions_;
};

std::vector<std::string> lemmatize(const std::vector<std::string>& tokens);

using StopWords = std::set<std::string, std::less<>>;

StopWords default_stopwords();
StopWords parse_stopwords(std::string_view text);
std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopWords& stopwords);

struct PreprocessOptions {
  bool lemmatize = true;
  bool remove_stopwords = false;
};

class Preprocessor {
 public:
  Preprocessor();
  Preprocessor(Cleaner cleaner, std::shared_ptr<const Lemmatizer> lemmatizer,
               StopWords stopwords);

  CleanDocument run(std::string_view record_id, std::string_view message,
                    const PreprocessOptions& options = {}) const;

  const Cleaner& cleaner() const { return cleaner_; }
  const StopWords& stopwords() const { return stopwords_; }
  const Lemmatizer& lemmatizer() const { return *lemmatizer_; }

 private:
  Cleaner cleaner_;
  std::shared_ptr<const Lemmatizer> lemmatizer_;
  StopWords stopwords_;
};

}  // namespace loggrouper
