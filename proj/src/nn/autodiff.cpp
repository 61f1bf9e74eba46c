#include "asrser/nn/autodiff.hpp"

#include <cmath>

#include "asrser/common.hpp"
#include "asrser/nn/ctc.hpp"

namespace asrser::nn {

Tensor& ParamStore::get_or_create(const std::string& name, Eigen::Index rows,
                                  Eigen::Index cols) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    Tensor t;
    t.value = Mat::Zero(rows, cols);
    t.grad = Mat::Zero(rows, cols);
    it = params_.emplace(name, std::move(t)).first;
  }
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw Error(ErrorCode::BadConfig, "unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw Error(ErrorCode::BadConfig, "unknown parameter: " + name);
  return it->second;
}

bool ParamStore::has(const std::string& name) const {
  return params_.count(name) > 0;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : params_) t.grad.setZero();
}

double ParamStore::grad_norm() const {
  double acc = 0.0;
  for (const auto& [name, t] : params_) acc += t.grad.squaredNorm();
  return std::sqrt(acc);
}

void ParamStore::clip_grad(double max_norm) {
  double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (auto& [name, t] : params_) t.grad *= scale;
  }
}

size_t ParamStore::count() const {
  size_t n = 0;
  for (const auto& [name, t] : params_) n += static_cast<size_t>(t.value.size());
  return n;
}

void accumulate(Node& n, const Mat& g) {
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  n.grad += g;
}

NodePtr Tape::make(Mat value, std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->parents = std::move(parents);
  node->backward_fn = std::move(backward_fn);
  for (const auto& p : node->parents)
    if (p->needs_grad) node->needs_grad = true;
  nodes_.push_back(node);
  return node;
}

NodePtr Tape::constant(Mat v) { return make(std::move(v), {}, nullptr); }

NodePtr Tape::param(Tensor& t) {
  auto node = make(t.value, {}, nullptr);
  node->needs_grad = true;
  Tensor* sink = &t;
  node->backward_fn = [sink](Node& n) { sink->grad += n.grad; };
  return node;
}

NodePtr Tape::matmul(const NodePtr& a, const NodePtr& b) {
  return make(a->value * b->value, {a, b}, [](Node& n) {
    auto& a = *n.parents[0];
    auto& b = *n.parents[1];
    if (a.needs_grad) accumulate(a, n.grad * b.value.transpose());
    if (b.needs_grad) accumulate(b, a.value.transpose() * n.grad);
  });
}

NodePtr Tape::add_rowwise(const NodePtr& x, const NodePtr& bias) {
  Mat v = x->value;
  v.rowwise() += bias->value.row(0);
  return make(std::move(v), {x, bias}, [](Node& n) {
    auto& x = *n.parents[0];
    auto& b = *n.parents[1];
    if (x.needs_grad) accumulate(x, n.grad);
    if (b.needs_grad) accumulate(b, n.grad.colwise().sum());
  });
}

NodePtr Tape::scale_add(const NodePtr& a, double alpha, const NodePtr& b,
                        double beta) {
  return make(alpha * a->value + beta * b->value, {a, b},
              [alpha, beta](Node& n) {
                auto& a = *n.parents[0];
                auto& b = *n.parents[1];
                if (a.needs_grad) accumulate(a, alpha * n.grad);
                if (b.needs_grad) accumulate(b, beta * n.grad);
              });
}

NodePtr Tape::tanh(const NodePtr& x) {
  auto node = make(x->value.array().tanh().matrix(), {x}, nullptr);
  node->backward_fn = [](Node& n) {
    auto& x = *n.parents[0];
    if (x.needs_grad)
      accumulate(x, (n.grad.array() * (1.0 - n.value.array().square())).matrix());
  };
  return node;
}

NodePtr Tape::relu(const NodePtr& x) {
  return make(x->value.cwiseMax(0.0), {x}, [](Node& n) {
    auto& x = *n.parents[0];
    if (x.needs_grad)
      accumulate(x, (n.grad.array() * (x.value.array() > 0.0).cast<double>())
                        .matrix());
  });
}

NodePtr Tape::concat_cols(const NodePtr& a, const NodePtr& b) {
  Mat v(a->value.rows(), a->value.cols() + b->value.cols());
  v << a->value, b->value;
  return make(std::move(v), {a, b}, [](Node& n) {
    auto& a = *n.parents[0];
    auto& b = *n.parents[1];
    if (a.needs_grad) accumulate(a, n.grad.leftCols(a.value.cols()));
    if (b.needs_grad) accumulate(b, n.grad.rightCols(b.value.cols()));
  });
}

NodePtr Tape::mean_rows(const NodePtr& x) {
  return make(x->value.colwise().mean(), {x}, [](Node& n) {
    auto& x = *n.parents[0];
    if (x.needs_grad) {
      Mat g = Mat::Zero(x.value.rows(), x.value.cols());
      g.rowwise() += (n.grad / static_cast<double>(x.value.rows())).row(0);
      accumulate(x, g);
    }
  });
}

NodePtr Tape::conv1d_s2(const NodePtr& x, const NodePtr& w, const NodePtr& b,
                        int kernel) {
  const Eigen::Index T = x->value.rows();
  const Eigen::Index cin = x->value.cols();
  const Eigen::Index cout = w->value.cols();
  const Eigen::Index t_out = (T + 1) / 2;
  const int pad = (kernel - 1) / 2;

  Mat v(t_out, cout);
  for (Eigen::Index t = 0; t < t_out; ++t) {
    Eigen::RowVectorXd acc = b->value.row(0);
    for (int j = 0; j < kernel; ++j) {
      Eigen::Index src = 2 * t - pad + j;
      if (src < 0 || src >= T) continue;
      acc += x->value.row(src) * w->value.middleRows(j * cin, cin);
    }
    v.row(t) = acc;
  }
  return make(std::move(v), {x, w, b}, [kernel, pad](Node& n) {
    auto& x = *n.parents[0];
    auto& w = *n.parents[1];
    auto& b = *n.parents[2];
    const Eigen::Index T = x.value.rows();
    const Eigen::Index cin = x.value.cols();
    if (b.needs_grad) accumulate(b, n.grad.colwise().sum());
    Mat gx = Mat::Zero(T, cin);
    Mat gw = Mat::Zero(w.value.rows(), w.value.cols());
    for (Eigen::Index t = 0; t < n.value.rows(); ++t) {
      for (int j = 0; j < kernel; ++j) {
        Eigen::Index src = 2 * t - pad + j;
        if (src < 0 || src >= T) continue;
        gw.middleRows(j * cin, cin) += x.value.row(src).transpose() * n.grad.row(t);
        gx.row(src) += n.grad.row(t) * w.value.middleRows(j * cin, cin).transpose();
      }
    }
    if (x.needs_grad) accumulate(x, gx);
    if (w.needs_grad) accumulate(w, gw);
  });
}

NodePtr Tape::birnn(const NodePtr& x, const NodePtr& wx_f, const NodePtr& wh_f,
                    const NodePtr& b_f, const NodePtr& wx_b,
                    const NodePtr& wh_b, const NodePtr& b_b) {
  const Eigen::Index T = x->value.rows();
  const Eigen::Index H = wx_f->value.cols();

  auto hf = std::make_shared<Mat>(T, H);
  auto hb = std::make_shared<Mat>(T, H);
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(H);
  for (Eigen::Index t = 0; t < T; ++t) {
    h = (x->value.row(t) * wx_f->value + h * wh_f->value + b_f->value.row(0))
            .array()
            .tanh();
    hf->row(t) = h;
  }
  h.setZero();
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    h = (x->value.row(t) * wx_b->value + h * wh_b->value + b_b->value.row(0))
            .array()
            .tanh();
    hb->row(t) = h;
  }
  Mat v(T, 2 * H);
  v << *hf, *hb;

  return make(std::move(v), {x, wx_f, wh_f, b_f, wx_b, wh_b, b_b},
              [hf, hb](Node& n) {
                auto& x = *n.parents[0];
                auto& wxf = *n.parents[1];
                auto& whf = *n.parents[2];
                auto& bf = *n.parents[3];
                auto& wxb = *n.parents[4];
                auto& whb = *n.parents[5];
                auto& bb = *n.parents[6];
                const Eigen::Index T = x.value.rows();
                const Eigen::Index H = hf->cols();

                Mat gx = Mat::Zero(T, x.value.cols());
                Mat gwxf = Mat::Zero(wxf.value.rows(), wxf.value.cols());
                Mat gwhf = Mat::Zero(H, H);
                Eigen::RowVectorXd gbf = Eigen::RowVectorXd::Zero(H);
                Mat gwxb = Mat::Zero(wxb.value.rows(), wxb.value.cols());
                Mat gwhb = Mat::Zero(H, H);
                Eigen::RowVectorXd gbb = Eigen::RowVectorXd::Zero(H);

                // forward direction, backprop through time
                Eigen::RowVectorXd carry = Eigen::RowVectorXd::Zero(H);
                for (Eigen::Index t = T - 1; t >= 0; --t) {
                  Eigen::RowVectorXd dh = n.grad.row(t).head(H) + carry;
                  Eigen::RowVectorXd dpre =
                      dh.array() * (1.0 - hf->row(t).array().square());
                  gwxf += x.value.row(t).transpose() * dpre;
                  if (t > 0) gwhf += hf->row(t - 1).transpose() * dpre;
                  gbf += dpre;
                  gx.row(t) += dpre * wxf.value.transpose();
                  carry = dpre * whf.value.transpose();
                }
                // backward direction
                carry.setZero();
                for (Eigen::Index t = 0; t < T; ++t) {
                  Eigen::RowVectorXd dh = n.grad.row(t).tail(H) + carry;
                  Eigen::RowVectorXd dpre =
                      dh.array() * (1.0 - hb->row(t).array().square());
                  gwxb += x.value.row(t).transpose() * dpre;
                  if (t + 1 < T) gwhb += hb->row(t + 1).transpose() * dpre;
                  gbb += dpre;
                  gx.row(t) += dpre * wxb.value.transpose();
                  carry = dpre * whb.value.transpose();
                }

                if (x.needs_grad) accumulate(x, gx);
                if (wxf.needs_grad) accumulate(wxf, gwxf);
                if (whf.needs_grad) accumulate(whf, gwhf);
                if (bf.needs_grad) accumulate(bf, gbf);
                if (wxb.needs_grad) accumulate(wxb, gwxb);
                if (whb.needs_grad) accumulate(whb, gwhb);
                if (bb.needs_grad) accumulate(bb, gbb);
              });
}

NodePtr Tape::rows_lookup(const NodePtr& table, const std::vector<int>& indices) {
  Mat v(static_cast<Eigen::Index>(indices.size()), table->value.cols());
  for (size_t i = 0; i < indices.size(); ++i)
    v.row(static_cast<Eigen::Index>(i)) = table->value.row(indices[i]);
  return make(std::move(v), {table}, [indices](Node& n) {
    auto& table = *n.parents[0];
    if (!table.needs_grad) return;
    Mat g = Mat::Zero(table.value.rows(), table.value.cols());
    for (size_t i = 0; i < indices.size(); ++i)
      g.row(indices[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    accumulate(table, g);
  });
}

NodePtr Tape::log_softmax_rows(const NodePtr& x) {
  Mat v = x->value;
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    double mx = v.row(r).maxCoeff();
    double lse = mx + std::log((v.row(r).array() - mx).exp().sum());
    v.row(r).array() -= lse;
  }
  auto node = make(std::move(v), {x}, nullptr);
  node->backward_fn = [](Node& n) {
    auto& x = *n.parents[0];
    if (!x.needs_grad) return;
    Mat g = n.grad;
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      double gsum = n.grad.row(r).sum();
      g.row(r) -= gsum * n.value.row(r).array().exp().matrix();
    }
    accumulate(x, g);
  };
  return node;
}

NodePtr Tape::ctc_loss(const NodePtr& log_probs, const std::vector<int>& targets) {
  auto res = std::make_shared<CtcResult>(
      ctc_forward_backward(log_probs->value, targets));
  Mat v(1, 1);
  v(0, 0) = res->loss;
  return make(std::move(v), {log_probs}, [res](Node& n) {
    auto& lp = *n.parents[0];
    if (lp.needs_grad) accumulate(lp, n.grad(0, 0) * res->grad_log_probs);
  });
}

NodePtr Tape::cross_entropy(const NodePtr& logits, int label) {
  const auto& z = logits->value;
  double mx = z.row(0).maxCoeff();
  double lse = mx + std::log((z.row(0).array() - mx).exp().sum());
  Mat v(1, 1);
  v(0, 0) = lse - z(0, label);
  auto softmax = std::make_shared<Eigen::RowVectorXd>(
      (z.row(0).array() - lse).exp().matrix());
  return make(std::move(v), {logits}, [softmax, label](Node& n) {
    auto& logits = *n.parents[0];
    if (!logits.needs_grad) return;
    Mat g = *softmax * n.grad(0, 0);
    g(0, label) -= n.grad(0, 0);
    accumulate(logits, g);
  });
}

void Tape::backward(const NodePtr& root, double seed) {
  root->grad = Mat::Constant(1, 1, seed);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (!n.needs_grad || n.grad.size() == 0 || !n.backward_fn) continue;
    n.backward_fn(n);
  }
}

}  // namespace asrser::nn
