#include "loggrouper/keyphrase.hpp"

#include <algorithm>
#include <map>

namespace loggrouper {

std::vector<ScoredPhrase> rake_extract(const std::vector<std::string>& texts,
                                       const StopWords& stopwords, int top_n) {
  std::vector<std::vector<std::string>> candidates;
  for (const auto& text : texts) {
    std::vector<std::string> run;
    for (auto& token : tokenize(text)) {
      if (stopwords.count(token)) {
        if (!run.empty()) candidates.push_back(std::move(run));
        run.clear();
      } else {
        run.push_back(std::move(token));
      }
    }
    if (!run.empty()) candidates.push_back(std::move(run));
  }

  std::map<std::string, double> frequency;
  std::map<std::string, double> degree;
  for (const auto& c : candidates)
    for (const auto& w : c) {
      frequency[w] += 1.0;
      degree[w] += static_cast<double>(c.size());
    }

  std::map<std::string, ScoredPhrase> phrases;
  for (const auto& c : candidates) {
    std::string text;
    double score = 0.0;
    for (const auto& w : c) {
      if (!text.empty()) text += ' ';
      text += w;
      score += degree[w] / frequency[w];
    }
    auto [it, inserted] = phrases.try_emplace(text, ScoredPhrase{text, score, 0});
    ++it->second.frequency;
  }

  std::vector<ScoredPhrase> ranked;
  ranked.reserve(phrases.size());
  for (auto& [text, p] : phrases) ranked.push_back(std::move(p));
  std::stable_sort(ranked.begin(), ranked.end(), [](const ScoredPhrase& a, const ScoredPhrase& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.phrase < b.phrase;
  });
  if (top_n >= 0 && ranked.size() > static_cast<std::size_t>(top_n))
    ranked.resize(static_cast<std::size_t>(top_n));
  return ranked;
}

KeyphraseCloud wordcloud_data(int cluster_label, const std::vector<ScoredPhrase>& ranked) {
  KeyphraseCloud cloud;
  cloud.cluster_label = cluster_label;
  double max_score = 0.0;
  for (const auto& p : ranked) max_score = std::max(max_score, p.score);
  for (const auto& p : ranked)
    cloud.phrases.push_back({p.phrase, p.score, max_score > 0.0 ? p.score / max_score : 0.0});
  return cloud;
}

}  // namespace loggrouper
