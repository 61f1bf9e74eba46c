#include "asrser/eval/wer.hpp"

#include <cctype>

#include "asrser/common.hpp"

namespace asrser::eval {

std::vector<std::string> normalize_words(const std::string& text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '\'')
      clean += static_cast<char>(std::tolower(uc));
    else if (std::isspace(uc))
      clean += ' ';
    // other punctuation dropped
  }
  std::vector<std::string> words;
  std::string cur;
  for (char c : clean) {
    if (c == ' ') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

WerBreakdown word_edit_distance(const std::vector<std::string>& ref,
                                const std::vector<std::string>& hyp) {
  if (ref.empty())
    throw Error(ErrorCode::EmptyReference, "word_edit_distance: empty reference");

  const size_t n = ref.size(), m = hyp.size();
  // d[i][j]: cost of aligning ref[0..i) with hyp[0..j)
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      int sub = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int del = d[i - 1][j] + 1;
      int ins = d[i][j - 1] + 1;
      d[i][j] = std::min({sub, del, ins});
    }
  }

  WerBreakdown out;
  out.ref_words = static_cast<int>(n);
  // backtrace, preferring match/substitution, then deletion, then insertion
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++out.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++out.deletions;
      --i;
    } else {
      ++out.insertions;
      --j;
    }
  }
  out.wer = static_cast<double>(out.substitutions + out.deletions +
                                out.insertions) /
            static_cast<double>(out.ref_words);
  return out;
}

double corpus_wer(const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty())
    throw Error(ErrorCode::EmptyReference, "corpus_wer: empty pair list");
  long errors = 0, words = 0;
  for (const auto& [ref, hyp] : pairs) {
    WerBreakdown b = word_edit_distance(normalize_words(ref), normalize_words(hyp));
    errors += b.substitutions + b.deletions + b.insertions;
    words += b.ref_words;
  }
  return 100.0 * static_cast<double>(errors) / static_cast<double>(words);
}

}  // namespace asrser::eval
