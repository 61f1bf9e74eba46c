#include "asrser/model/vocab.hpp"

#include "asrser/common.hpp"

namespace asrser::model {

Vocab::Vocab() {
  tokens_.push_back("<blank>");
  for (char c = 'a'; c <= 'z'; ++c) tokens_.push_back(std::string(1, c));
  tokens_.push_back(" ");
  tokens_.push_back("'");
  for (int i = 0; i < 256; ++i) index_of_[i] = -1;
  for (size_t i = 1; i < tokens_.size(); ++i)
    index_of_[static_cast<unsigned char>(tokens_[i][0])] = static_cast<int>(i);
}

std::vector<int> Vocab::encode(const std::string& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) {
    int idx = index_of_[static_cast<unsigned char>(c)];
    if (idx < 0)
      throw Error(ErrorCode::BadVocabChar,
                  std::string("character outside vocabulary: '") + c + "'");
    out.push_back(idx);
  }
  return out;
}

std::string Vocab::decode(const std::vector<int>& tokens) const {
  std::string out;
  for (int t : tokens) {
    if (t <= 0 || t >= size()) continue;  // blank and out-of-range dropped
    out += tokens_[static_cast<size_t>(t)];
  }
  return out;
}

}  // namespace asrser::model
