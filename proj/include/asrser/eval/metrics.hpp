// Classification metrics and the relative-improvement arithmetic.
#pragma once

#include <array>
#include <vector>

#include "asrser/corpus/manifest.hpp"

namespace asrser::eval {

using Confusion = std::array<std::array<int, 4>, 4>;  // row = true, col = pred

// Overall (pooled) accuracy in percent.
double ser_accuracy(const std::vector<corpus::Emotion>& labels,
                    const std::vector<corpus::Emotion>& preds);

Confusion confusion(const std::vector<corpus::Emotion>& labels,
                    const std::vector<corpus::Emotion>& preds);

// Mean of per-class recalls, in percent (diagnostic only).
double unweighted_average_recall(const std::vector<corpus::Emotion>& labels,
                                 const std::vector<corpus::Emotion>& preds);

enum class Task { asr, ser };

// ASR: 100 * (baseline - joint) / baseline (relative WER reduction).
// SER: joint - baseline (absolute percentage points).
// Positive means the joint model is better for both tasks.
double relative_improvement(double baseline, double joint, Task task);

}  // namespace asrser::eval
