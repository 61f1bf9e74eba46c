// Minimal reverse-mode autodiff over Eigen matrices.
//
// A Tape owns the nodes of one forward pass in creation order; backward()
// walks them in reverse. Parameters live outside the tape in a ParamStore
// and accumulate gradients across calls until zero_grad().
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace asrser::nn {

using Mat = Eigen::MatrixXd;

struct Tensor {
  Mat value;
  Mat grad;
};

class ParamStore {
 public:
  // Creates the tensor on first use (zero-initialized); returns it thereafter.
  Tensor& get_or_create(const std::string& name, Eigen::Index rows,
                        Eigen::Index cols);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;

  void zero_grad();
  double grad_norm() const;
  // Scales all gradients so the global norm is at most max_norm.
  void clip_grad(double max_norm);

  size_t count() const;  // total scalar parameters
  std::map<std::string, Tensor>& items() { return params_; }
  const std::map<std::string, Tensor>& items() const { return params_; }

 private:
  std::map<std::string, Tensor> params_;
};

struct Node {
  Mat value;
  Mat grad;  // allocated on demand during backward
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  bool needs_grad = false;
};

using NodePtr = std::shared_ptr<Node>;

class Tape {
 public:
  NodePtr constant(Mat v);
  NodePtr param(Tensor& t);

  NodePtr matmul(const NodePtr& a, const NodePtr& b);
  // x: T x D, bias: 1 x D added to every row
  NodePtr add_rowwise(const NodePtr& x, const NodePtr& bias);
  NodePtr scale_add(const NodePtr& a, double alpha, const NodePtr& b,
                    double beta);
  NodePtr tanh(const NodePtr& x);
  NodePtr relu(const NodePtr& x);
  NodePtr concat_cols(const NodePtr& a, const NodePtr& b);
  NodePtr mean_rows(const NodePtr& x);  // T x D -> 1 x D
  // Strided (stride 2) 1-D convolution over time with 'same' padding:
  // x: T x Cin, w: (kernel*Cin) x Cout, b: 1 x Cout, output ceil(T/2) x Cout.
  NodePtr conv1d_s2(const NodePtr& x, const NodePtr& w, const NodePtr& b,
                    int kernel = 3);
  // Bidirectional tanh RNN; output row t = [h_fwd(t), h_bwd(t)], T x 2H.
  NodePtr birnn(const NodePtr& x, const NodePtr& wx_f, const NodePtr& wh_f,
                const NodePtr& b_f, const NodePtr& wx_b, const NodePtr& wh_b,
                const NodePtr& b_b);
  // Embedding lookup; table: V x E, output indices.size() x E.
  NodePtr rows_lookup(const NodePtr& table, const std::vector<int>& indices);
  NodePtr log_softmax_rows(const NodePtr& x);
  // CTC negative log-likelihood of the target under the per-row log
  // distributions; blank is token 0. Scalar (1x1) output.
  NodePtr ctc_loss(const NodePtr& log_probs, const std::vector<int>& targets);
  // Softmax cross-entropy for a single 1 x C logit row. Scalar output.
  NodePtr cross_entropy(const NodePtr& logits, int label);

  // Seeds root with the given grad and propagates. Root must be scalar.
  void backward(const NodePtr& root, double seed = 1.0);

 private:
  NodePtr make(Mat value, std::vector<NodePtr> parents,
               std::function<void(Node&)> backward_fn);
  std::vector<NodePtr> nodes_;
};

// Accumulates g into n's grad, allocating on first use.
void accumulate(Node& n, const Mat& g);

}  // namespace asrser::nn
