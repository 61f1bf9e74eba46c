// CTC forward-backward loss and greedy decoding, blank = token 0.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace asrser::nn {

struct CtcResult {
  double loss = 0.0;                 // -log P(target | lattice)
  Eigen::MatrixXd grad_log_probs;    // d loss / d log_probs, T x V
};

// Log-space forward-backward over the blank-interleaved label sequence.
// Throws Error(InfeasibleTarget) when T < |target| + adjacent repeats, and
// Error(BadVocabChar) on out-of-range or blank target tokens.
CtcResult ctc_forward_backward(const Eigen::MatrixXd& log_probs,
                               const std::vector<int>& targets);

// Per-frame argmax (ties to the lowest index), collapse adjacent repeats,
// drop blanks.
std::vector<int> ctc_greedy_path(const Eigen::MatrixXd& log_probs);
std::vector<int> ctc_collapse(const std::vector<int>& path);

}  // namespace asrser::nn
