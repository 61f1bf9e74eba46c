// Word error rate: normalization, edit distance, pooled corpus scoring.
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace asrser::eval {

struct WerBreakdown {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int ref_words = 0;
  double wer = 0.0;  // (S + D + I) / N, may exceed 1
};

// Lowercase, strip punctuation except apostrophes, collapse whitespace.
std::vector<std::string> normalize_words(const std::string& text);

// Minimal S + D + I with unit costs; deterministic backtrace preferring
// match/substitution, then deletion, then insertion.
WerBreakdown word_edit_distance(const std::vector<std::string>& ref,
                                const std::vector<std::string>& hyp);

// Pooled percent WER: 100 * sum(S+D+I) / sum(N). Inputs are raw transcripts
// (normalized internally).
double corpus_wer(const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace asrser::eval
