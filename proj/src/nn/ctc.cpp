#include "asrser/nn/ctc.hpp"

#include <cmath>
#include <limits>

#include "asrser/common.hpp"

namespace asrser::nn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

CtcResult ctc_forward_backward(const Eigen::MatrixXd& log_probs,
                               const std::vector<int>& targets) {
  const int T = static_cast<int>(log_probs.rows());
  const int V = static_cast<int>(log_probs.cols());
  const int L = static_cast<int>(targets.size());
  if (L == 0)
    throw Error(ErrorCode::InfeasibleTarget, "ctc_loss: empty target");
  int repeats = 0;
  for (int i = 0; i < L; ++i) {
    if (targets[i] <= 0 || targets[i] >= V)
      throw Error(ErrorCode::BadVocabChar,
                  "ctc_loss: target token out of range: " +
                      std::to_string(targets[i]));
    if (i > 0 && targets[i] == targets[i - 1]) ++repeats;
  }
  if (T < L + repeats)
    throw Error(ErrorCode::InfeasibleTarget,
                "ctc_loss: target needs at least " + std::to_string(L + repeats) +
                    " frames, lattice has " + std::to_string(T));

  // Blank-interleaved extended labels, length S = 2L + 1.
  const int S = 2 * L + 1;
  std::vector<int> ext(S, 0);
  for (int i = 0; i < L; ++i) ext[2 * i + 1] = targets[i];

  auto lp = [&](int t, int s) { return log_probs(t, ext[s]); };

  Eigen::MatrixXd alpha = Eigen::MatrixXd::Constant(S, T, kNegInf);
  alpha(0, 0) = lp(0, 0);
  if (S > 1) alpha(1, 0) = lp(0, 1);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = alpha(s, t - 1);
      if (s >= 1) a = log_add(a, alpha(s - 1, t - 1));
      // skip over a blank unless the surrounding labels repeat
      if (s >= 2 && ext[s] != 0 && ext[s] != ext[s - 2])
        a = log_add(a, alpha(s - 2, t - 1));
      alpha(s, t) = a == kNegInf ? kNegInf : a + lp(t, s);
    }
  }

  double log_p = alpha(S - 1, T - 1);
  if (S > 1) log_p = log_add(log_p, alpha(S - 2, T - 1));

  Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(S, T, kNegInf);
  beta(S - 1, T - 1) = lp(T - 1, S - 1);
  if (S > 1) beta(S - 2, T - 1) = lp(T - 1, S - 2);
  for (int t = T - 2; t >= 0; --t) {
    for (int s = S - 1; s >= 0; --s) {
      double b = beta(s, t + 1);
      if (s + 1 < S) b = log_add(b, beta(s + 1, t + 1));
      if (s + 2 < S && ext[s + 2] != 0 && ext[s + 2] != ext[s])
        b = log_add(b, beta(s + 2, t + 1));
      beta(s, t) = b == kNegInf ? kNegInf : b + lp(t, s);
    }
  }

  CtcResult res;
  res.loss = -log_p;
  res.grad_log_probs = Eigen::MatrixXd::Zero(T, V);
  // d(-log P)/d lp(t,k) = -exp( logsum_{s: ext_s=k}(alpha+beta) - logP - lp(t,k) )
  for (int t = 0; t < T; ++t) {
    std::vector<double> acc(V, kNegInf);
    for (int s = 0; s < S; ++s) {
      double ab = alpha(s, t) + beta(s, t);
      if (ab != kNegInf) acc[ext[s]] = log_add(acc[ext[s]], ab);
    }
    for (int k = 0; k < V; ++k) {
      if (acc[k] == kNegInf) continue;
      res.grad_log_probs(t, k) = -std::exp(acc[k] - log_p - log_probs(t, k));
    }
  }
  return res;
}

std::vector<int> ctc_greedy_path(const Eigen::MatrixXd& log_probs) {
  std::vector<int> path(log_probs.rows());
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    int best = 0;
    for (Eigen::Index k = 1; k < log_probs.cols(); ++k)
      if (log_probs(t, k) > log_probs(t, best)) best = static_cast<int>(k);
    path[t] = best;
  }
  return path;
}

std::vector<int> ctc_collapse(const std::vector<int>& path) {
  std::vector<int> out;
  int prev = -1;
  for (int tok : path) {
    if (tok != prev && tok != 0) out.push_back(tok);
    prev = tok;
  }
  return out;
}

}  // namespace asrser::nn
