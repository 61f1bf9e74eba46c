// Leave-one-speaker-out fold planning.
#pragma once

#include <string>
#include <vector>

#include "asrser/corpus/manifest.hpp"

namespace asrser::corpus {

struct Fold {
  std::string test_speaker;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

struct FoldPlan {
  std::vector<Fold> folds;  // ordered by speaker id
};

// One fold per distinct speaker; fold k tests speaker k, trains on the rest.
FoldPlan make_loso_folds(const std::vector<UtteranceRecord>& records);

}  // namespace asrser::corpus
