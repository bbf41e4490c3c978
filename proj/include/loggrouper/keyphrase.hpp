#pragma once

#include <string>
#include <vector>

#include "loggrouper/preprocess.hpp"

namespace loggrouper {

struct ScoredPhrase {
  std::string phrase;
  double score = 0.0;
  int frequency = 0;  // occurrences merged into this phrase
};

// RAKE over already-cleaned texts. Candidates are maximal runs of non-stop
// words; each text boundary also ends a candidate. word score =
// degree / frequency, phrase score = sum of word scores. Sorted by score
// descending, ties by phrase.
std::vector<ScoredPhrase> rake_extract(const std::vector<std::string>& texts,
                                       const StopWords& stopwords, int top_n = 15);

struct CloudPhrase {
  std::string text;
  double score = 0.0;
  double weight = 0.0;  // score / max score
};

struct KeyphraseCloud {
  int cluster_label = 0;
  std::vector<CloudPhrase> phrases;
};

KeyphraseCloud wordcloud_data(int cluster_label, const std::vector<ScoredPhrase>& ranked);

}  // namespace loggrouper
