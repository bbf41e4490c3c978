#include "loggrouper/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "loggrouper/error.hpp"

namespace loggrouper {
namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(c);
  }
  return out;
}

bool all_lower_alpha(std::string_view t) {
  return std::all_of(t.begin(), t.end(),
                     [](unsigned char c) { return c >= 'a' && c <= 'z'; });
}

bool ends_with(std::string_view t, std::string_view suffix) {
  return t.size() >= suffix.size() && t.substr(t.size() - suffix.size()) == suffix;
}

bool has_vowel(std::string_view t) {
  return t.find_first_of("aeiouy") != std::string_view::npos;
}

bool is_consonant(char c) { return std::string_view("aeiouy").find(c) == std::string_view::npos; }

constexpr std::size_t kMinStem = 3;

// Repairs a stem left behind by removing -ing/-ed: undoubles a final
// consonant pair (stopp -> stop) and restores a dropped e (configur -> configure).
std::string repair_stem(std::string stem) {
  const std::size_t n = stem.size();
  if (n >= kMinStem + 1 && stem[n - 1] == stem[n - 2] && is_consonant(stem[n - 1]) &&
      std::string_view("lsz").find(stem[n - 1]) == std::string_view::npos) {
    stem.pop_back();
    return stem;
  }
  static constexpr std::string_view kSilentE[] = {"at", "bl", "iz", "ur", "ut", "os", "ag",
                                                  "iv", "ov", "uc", "rg", "rs", "lv", "us"};
  for (auto suffix : kSilentE)
    if (ends_with(stem, suffix)) return stem + 'e';
  return stem;
}

}  // namespace

std::vector<std::string> CleanOptions::default_timestamp_patterns() {
  return {
      R"(\d{4}-\d{2}-\d{2}[t ]\d{2}:\d{2}:\d{2}(?:[.,]\d+)?(?:z|[+-]\d{2}:?\d{2})?)",
      R"(\d{4}[-/]\d{2}[-/]\d{2})",
      R"((?:jan|feb|mar|apr|may|jun|jul|aug|sep|oct|nov|dec)\s+\d{1,2}\s+\d{2}:\d{2}:\d{2})",
      R"(\d{1,2}:\d{2}:\d{2}(?:[.,]\d+)?)",
      R"(\[\s*\d+\.\d+\])",
      R"(\b\d{10}(?:\.\d+)?\b)",
      R"(\b\d{13}\b)",
  };
}

Cleaner::Cleaner(CleanOptions options) : options_(std::move(options)) {
  for (const auto& p : options_.timestamp_patterns) {
    try {
      timestamp_res_.emplace_back(p, std::regex::ECMAScript | std::regex::icase |
                                         std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::InvalidArgument,
                  "invalid timestamp pattern '" + p + "': " + e.what());
    }
  }
}

std::string Cleaner::strip_timestamps(std::string text) const {
  for (const auto& re : timestamp_res_) text = std::regex_replace(text, re, " ");
  return text;
}

std::string Cleaner::strip_symbols(std::string_view text) const {
  const std::string_view keep = options_.keep_inside_token;
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (!is_word_byte(c) && keep.find(static_cast<char>(c)) == std::string_view::npos) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size()) {
      const auto d = static_cast<unsigned char>(text[j]);
      if (!is_word_byte(d) && keep.find(static_cast<char>(d)) == std::string_view::npos) break;
      ++j;
    }
    std::string_view token = text.substr(i, j - i);
    i = j;
    while (!token.empty() && !is_word_byte(static_cast<unsigned char>(token.back())))
      token.remove_suffix(1);
    while (!token.empty() && token.front() != '/' &&
           !is_word_byte(static_cast<unsigned char>(token.front())))
      token.remove_prefix(1);
    if (std::none_of(token.begin(), token.end(),
                     [](unsigned char ch) { return is_word_byte(ch); }))
      continue;
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

std::string Cleaner::clean(std::string_view message) const {
  std::string text(message);
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) {
    return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
  });
  // Symbol removal can expose a new timestamp-shaped run, so iterate to a
  // fixed point; in practice this settles after one extra pass.
  for (int pass = 0; pass < 8; ++pass) {
    std::string next = collapse_whitespace(strip_symbols(strip_timestamps(text)));
    if (next == text) break;
    text = std::move(next);
  }
  return text;
}

std::string clean(std::string_view message) {
  static const Cleaner cleaner;
  return cleaner.clean(message);
}

std::vector<std::string> tokenize(std::string_view cleaned) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && is_space(static_cast<unsigned char>(cleaned[i]))) ++i;
    std::size_t j = i;
    while (j < cleaned.size() && !is_space(static_cast<unsigned char>(cleaned[j]))) ++j;
    if (j > i) tokens.emplace_back(cleaned.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::vector<std::string> Lemmatizer::lemmatize(const std::vector<std::string>& tokens) const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lemma(t));
  return out;
}

RuleLemmatizer::RuleLemmatizer() : exceptions_(default_exceptions()) {}

RuleLemmatizer::RuleLemmatizer(std::map<std::string, std::string> exceptions)
    : exceptions_(std::move(exceptions)) {}

std::map<std::string, std::string> RuleLemmatizer::default_exceptions() {
  return {
      {"added", "add"},       {"anything", "anything"}, {"bps", "bps"},
      {"caches", "cache"},    {"does", "do"},           {"during", "during"},
      {"everything", "everything"}, {"gbps", "gbps"},   {"goes", "go"},
      {"kbps", "kbps"},       {"mbps", "mbps"},         {"nothing", "nothing"},
      {"series", "series"},   {"something", "something"}, {"string", "string"},
      {"strings", "string"},  {"thing", "thing"},       {"things", "thing"},
      {"timed", "time"},      {"timing", "timing"},     {"used", "use"},
      {"uses", "use"},        {"using", "use"},         {"was", "was"},
      {"has", "has"},         {"alias", "alias"},       {"bias", "bias"},
  };
}

std::map<std::string, std::string> RuleLemmatizer::parse_exceptions(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorCode::Parse,
                  "lemma line " + std::to_string(line_no) + ": expected token<TAB>lemma");
    std::string token = line.substr(0, tab);
    std::string lemma = line.substr(tab + 1);
    if (token.empty() || lemma.empty() || lemma.size() > token.size())
      throw Error(ErrorCode::Parse, "lemma line " + std::to_string(line_no) +
                                        ": lemma must be non-empty and not longer than token");
    out[std::move(token)] = std::move(lemma);
  }
  return out;
}

std::string RuleLemmatizer::lemma(std::string_view token) const {
  if (auto it = exceptions_.find(std::string(token)); it != exceptions_.end())
    return it->second;
  // Identifiers (digits, paths, dotted or dashed names) pass through.
  if (!all_lower_alpha(token) || token.size() <= kMinStem) return std::string(token);
  const std::string t(token);

  if (ends_with(t, "ies") && t.size() - 2 >= kMinStem) return t.substr(0, t.size() - 3) + "y";
  if (ends_with(t, "sses") || ends_with(t, "xes") || ends_with(t, "ches") ||
      ends_with(t, "shes") || ends_with(t, "zes"))
    return t.substr(0, t.size() - 2);
  if (ends_with(t, "s") && !ends_with(t, "ss") && !ends_with(t, "us") &&
      !ends_with(t, "is") && !ends_with(t, "as") && t.size() - 1 >= kMinStem)
    return t.substr(0, t.size() - 1);

  if (ends_with(t, "ing")) {
    const std::string stem = t.substr(0, t.size() - 3);
    if (stem.size() >= kMinStem && has_vowel(stem)) return repair_stem(stem);
    return t;
  }
  if (ends_with(t, "ed") && !ends_with(t, "eed")) {
    const std::string stem = t.substr(0, t.size() - 2);
    if (stem.size() >= kMinStem && has_vowel(stem)) return repair_stem(stem);
  }
  return t;
}

std::vector<std::string> lemmatize(const std::vector<std::string>& tokens) {
  static const RuleLemmatizer lemmatizer;
  return lemmatizer.lemmatize(tokens);
}

StopWords default_stopwords() {
  return {
      "a",       "about",   "above",   "after",  "again",   "against", "all",
      "am",      "an",      "and",     "any",    "are",     "as",      "at",
      "be",      "because", "been",    "before", "being",   "below",   "between",
      "both",    "but",     "by",      "can",    "could",   "did",     "do",
      "does",    "doing",   "down",    "during", "each",    "few",     "for",
      "from",    "further", "had",     "has",    "have",    "having",  "he",
      "her",     "here",    "hers",    "him",    "his",     "how",     "i",
      "if",      "in",      "into",    "is",     "it",      "its",     "itself",
      "just",    "me",      "more",    "most",   "my",      "no",      "nor",
      "not",     "now",     "of",      "off",    "on",      "once",    "only",
      "or",      "other",   "our",     "ours",   "out",     "over",    "own",
      "same",    "she",     "should",  "so",     "some",    "such",    "than",
      "that",    "the",     "their",   "them",   "then",    "there",   "these",
      "they",    "this",    "those",   "through", "to",     "too",     "under",
      "until",   "up",      "very",    "was",    "we",      "were",    "what",
      "when",    "where",   "which",   "while",  "who",     "whom",    "why",
      "will",    "with",    "would",   "you",    "your",    "yours",
  };
}

StopWords parse_stopwords(std::string_view text) {
  StopWords out;
  for (auto& t : tokenize(text)) {
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.insert(std::move(t));
  }
  return out;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopWords& stopwords) {
  std::vector<std::string> out;
  for (const auto& t : tokens)
    if (!stopwords.count(t)) out.push_back(t);
  return out;
}

Preprocessor::Preprocessor()
    : lemmatizer_(std::make_shared<RuleLemmatizer>()), stopwords_(default_stopwords()) {}

Preprocessor::Preprocessor(Cleaner cleaner, std::shared_ptr<const Lemmatizer> lemmatizer,
                           StopWords stopwords)
    : cleaner_(std::move(cleaner)),
      lemmatizer_(std::move(lemmatizer)),
      stopwords_(std::move(stopwords)) {}

CleanDocument Preprocessor::run(std::string_view record_id, std::string_view message,
                                const PreprocessOptions& options) const {
  CleanDocument doc;
  doc.record_id = std::string(record_id);
  doc.raw = std::string(message);
  doc.cleaned = cleaner_.clean(message);
  doc.tokens = tokenize(doc.cleaned);
  if (options.lemmatize) doc.tokens = lemmatizer_->lemmatize(doc.tokens);
  if (options.remove_stopwords) doc.tokens = remove_stopwords(doc.tokens, stopwords_);
  doc.empty = doc.tokens.empty();
  return doc;
}

}  // namespace loggrouper
