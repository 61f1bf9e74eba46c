// Character CTC vocabulary: blank, a-z, space, apostrophe.
#pragma once

#include <string>
#include <vector>

namespace asrser::model {

class Vocab {
 public:
  Vocab();

  int size() const { return static_cast<int>(tokens_.size()); }
  static constexpr int kBlank = 0;

  // Token ids for a transcript (no blanks). Throws BadVocabChar.
  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& tokens) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  int index_of_[256];
};

}  // namespace asrser::model
