#include "asrser/corpus/folds.hpp"

#include <map>

#include "asrser/common.hpp"

namespace asrser::corpus {

FoldPlan make_loso_folds(const std::vector<UtteranceRecord>& records) {
  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& r : records) by_speaker[r.speaker].push_back(r.id);
  if (by_speaker.size() < 2)
    throw Error(ErrorCode::SingleSpeaker,
                "leave-one-speaker-out needs at least 2 speakers, got " +
                    std::to_string(by_speaker.size()));

  FoldPlan plan;
  for (const auto& [speaker, test_ids] : by_speaker) {
    Fold fold;
    fold.test_speaker = speaker;
    fold.test_ids = test_ids;
    for (const auto& r : records)
      if (r.speaker != speaker) fold.train_ids.push_back(r.id);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace asrser::corpus
