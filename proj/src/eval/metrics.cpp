#include "asrser/eval/metrics.hpp"

#include "asrser/common.hpp"

namespace asrser::eval {

double ser_accuracy(const std::vector<corpus::Emotion>& labels,
                    const std::vector<corpus::Emotion>& preds) {
  if (labels.size() != preds.size())
    throw Error(ErrorCode::LengthMismatch, "ser_accuracy: length mismatch");
  if (labels.empty())
    throw Error(ErrorCode::LengthMismatch, "ser_accuracy: empty inputs");
  size_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == preds[i]) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

Confusion confusion(const std::vector<corpus::Emotion>& labels,
                    const std::vector<corpus::Emotion>& preds) {
  if (labels.size() != preds.size())
    throw Error(ErrorCode::LengthMismatch, "confusion: length mismatch");
  Confusion m{};
  for (size_t i = 0; i < labels.size(); ++i)
    ++m[static_cast<size_t>(labels[i])][static_cast<size_t>(preds[i])];
  return m;
}

double unweighted_average_recall(const std::vector<corpus::Emotion>& labels,
                                 const std::vector<corpus::Emotion>& preds) {
  Confusion m = confusion(labels, preds);
  double acc = 0.0;
  int classes = 0;
  for (int c = 0; c < 4; ++c) {
    int row = 0;
    for (int p = 0; p < 4; ++p) row += m[c][p];
    if (row == 0) continue;  // class absent from the labels
    acc += static_cast<double>(m[c][c]) / row;
    ++classes;
  }
  return classes == 0 ? 0.0 : 100.0 * acc / classes;
}

double relative_improvement(double baseline, double joint, Task task) {
  if (task == Task::asr) {
    if (baseline <= 0.0)
      throw Error(ErrorCode::BadConfig,
                  "relative_improvement: baseline WER must be positive");
    return 100.0 * (baseline - joint) / baseline;
  }
  return joint - baseline;
}

}  // namespace asrser::eval
