#include "asrser/model/model.hpp"

#include <cmath>

#include "asrser/common.hpp"
#include "asrser/nn/ctc.hpp"

namespace asrser::model {

using nn::Mat;
using nn::NodePtr;
using nn::Tape;

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::asr_baseline: return "asr_baseline";
    case Architecture::ser_baseline: return "ser_baseline";
    case Architecture::joint: return "joint";
  }
  return "joint";
}

Architecture architecture_from_string(const std::string& s) {
  if (s == "asr_baseline") return Architecture::asr_baseline;
  if (s == "ser_baseline") return Architecture::ser_baseline;
  if (s == "joint") return Architecture::joint;
  throw Error(ErrorCode::BadConfig, "unknown architecture: " + s);
}

std::string to_string(LinguisticSource s) {
  return s == LinguisticSource::decoded ? "decoded" : "reference";
}

LinguisticSource linguistic_source_from_string(const std::string& s) {
  if (s == "decoded") return LinguisticSource::decoded;
  if (s == "reference") return LinguisticSource::reference;
  throw Error(ErrorCode::BadConfig, "unknown linguistic source: " + s);
}

namespace {

void init_uniform(Mat& m, double scale, Rng& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rng.uniform(-scale, scale);
}

}  // namespace

Model::Model(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  Rng rng(init_seed);
  const int V = vocab_.size();
  const int C = cfg_.conv_channels;
  const int H = cfg_.enc_hidden;
  const int E = cfg_.embed_dim;
  const int TH = cfg_.text_hidden;

  // Creation order is fixed; parameter values are a pure function of the
  // seed regardless of which passes run later.
  auto create = [&](const std::string& name, int rows, int cols, double scale) {
    auto& t = params_.get_or_create(name, rows, cols);
    if (scale > 0.0) init_uniform(t.value, scale, rng);
  };
  auto dense = [&](const std::string& name, int in, int out) {
    create(name + ".w", in, out, std::sqrt(1.0 / in));
    create(name + ".b", 1, out, 0.0);
  };
  auto rnn = [&](const std::string& name, int in, int hidden) {
    create(name + ".wx_f", in, hidden, std::sqrt(1.0 / in));
    create(name + ".wh_f", hidden, hidden, std::sqrt(1.0 / hidden));
    create(name + ".b_f", 1, hidden, 0.0);
    create(name + ".wx_b", in, hidden, std::sqrt(1.0 / in));
    create(name + ".wh_b", hidden, hidden, std::sqrt(1.0 / hidden));
    create(name + ".b_b", 1, hidden, 0.0);
  };

  // shared encoder
  dense("enc.conv1", 3 * cfg_.n_mels, C);
  dense("enc.conv2", 3 * C, C);
  rnn("enc.rnn1", C, H);
  rnn("enc.rnn2", 2 * H, H);

  if (cfg_.arch != Architecture::ser_baseline) {
    dense("ctc", cfg_.d_a(), V);
  }
  if (cfg_.arch == Architecture::ser_baseline) {
    dense("ser.l1", cfg_.d_a(), cfg_.ser_mlp_hidden);
    dense("ser.l2", cfg_.ser_mlp_hidden, kNumEmotionClasses);
  }
  if (cfg_.arch == Architecture::joint) {
    create("text.embed", V, E, 0.1);
    create("text.default", 1, cfg_.d_l(), 0.1);
    rnn("text.rnn", E, TH);
    dense("fusion.a.l1", cfg_.d_a(), cfg_.d_a());
    dense("fusion.a.l2", cfg_.d_a(), cfg_.d_a());
    dense("fusion.l.l1", cfg_.d_l(), cfg_.d_l());
    dense("fusion.l.l2", cfg_.d_l(), cfg_.d_l());
    dense("emo", cfg_.d_a() + cfg_.d_l(), kNumEmotionClasses);
  }
}

NodePtr Model::weight(Tape& tape, const std::string& name, bool frozen) {
  nn::Tensor& t = params_.get(name);
  if (frozen) return tape.constant(t.value);
  return tape.param(t);
}

NodePtr Model::build_encoder(Tape& tape, const audio::FeatureMatrix& features) {
  if (features.rows() < 4)
    throw Error(ErrorCode::BufferTooShort,
                "encoder needs at least 4 frames, got " +
                    std::to_string(features.rows()));
  if (features.cols() != cfg_.n_mels)
    throw Error(ErrorCode::BadConfig, "encoder: feature dim mismatch");

  const bool frz = cfg_.freeze_frontend;
  auto x = tape.constant(features);
  auto c1 = tape.relu(tape.conv1d_s2(x, weight(tape, "enc.conv1.w", frz),
                                     weight(tape, "enc.conv1.b", frz)));
  auto c2 = tape.relu(tape.conv1d_s2(c1, weight(tape, "enc.conv2.w", frz),
                                     weight(tape, "enc.conv2.b", frz)));
  auto r1 = tape.birnn(c2, weight(tape, "enc.rnn1.wx_f"),
                       weight(tape, "enc.rnn1.wh_f"), weight(tape, "enc.rnn1.b_f"),
                       weight(tape, "enc.rnn1.wx_b"), weight(tape, "enc.rnn1.wh_b"),
                       weight(tape, "enc.rnn1.b_b"));
  auto r2 = tape.birnn(r1, weight(tape, "enc.rnn2.wx_f"),
                       weight(tape, "enc.rnn2.wh_f"), weight(tape, "enc.rnn2.b_f"),
                       weight(tape, "enc.rnn2.wx_b"), weight(tape, "enc.rnn2.wh_b"),
                       weight(tape, "enc.rnn2.b_b"));
  return r2;
}

NodePtr Model::build_ctc_log_probs(Tape& tape, const NodePtr& enc) {
  auto logits = tape.add_rowwise(tape.matmul(enc, weight(tape, "ctc.w")),
                                 weight(tape, "ctc.b"));
  return tape.log_softmax_rows(logits);
}

NodePtr Model::build_text_encoder(Tape& tape, const std::string& transcript) {
  if (transcript.empty()) return weight(tape, "text.default");
  std::vector<int> tokens = vocab_.encode(transcript);
  auto emb = tape.rows_lookup(weight(tape, "text.embed"), tokens);
  auto rnn = tape.birnn(emb, weight(tape, "text.rnn.wx_f"),
                        weight(tape, "text.rnn.wh_f"), weight(tape, "text.rnn.b_f"),
                        weight(tape, "text.rnn.wx_b"), weight(tape, "text.rnn.wh_b"),
                        weight(tape, "text.rnn.b_b"));
  return tape.mean_rows(rnn);
}

NodePtr Model::build_fusion(Tape& tape, const NodePtr& acoustic,
                            const NodePtr& linguistic) {
  auto mlp = [&](const NodePtr& in, const std::string& name) {
    auto h = tape.tanh(tape.add_rowwise(
        tape.matmul(in, weight(tape, name + ".l1.w")), weight(tape, name + ".l1.b")));
    return tape.add_rowwise(tape.matmul(h, weight(tape, name + ".l2.w")),
                            weight(tape, name + ".l2.b"));
  };
  auto a = tape.scale_add(acoustic, 1.0, mlp(acoustic, "fusion.a"), 1.0);
  auto l = tape.scale_add(linguistic, 1.0, mlp(linguistic, "fusion.l"), 1.0);
  return tape.concat_cols(a, l);
}

NodePtr Model::build_ser_baseline_head(Tape& tape, const NodePtr& pooled) {
  auto h = tape.tanh(tape.add_rowwise(tape.matmul(pooled, weight(tape, "ser.l1.w")),
                                      weight(tape, "ser.l1.b")));
  return tape.add_rowwise(tape.matmul(h, weight(tape, "ser.l2.w")),
                          weight(tape, "ser.l2.b"));
}

NodePtr Model::build_emotion_head(Tape& tape, const NodePtr& fused) {
  return tape.add_rowwise(tape.matmul(fused, weight(tape, "emo.w")),
                          weight(tape, "emo.b"));
}

JointGraph Model::build_joint(Tape& tape, const audio::FeatureMatrix& features,
                              LinguisticSource source,
                              const std::optional<std::string>& reference) {
  JointGraph g;
  auto enc = build_encoder(tape, features);
  g.lattice = build_ctc_log_probs(tape, enc);

  if (source == LinguisticSource::reference) {
    if (!reference)
      throw Error(ErrorCode::MissingReference,
                  "joint forward: linguistic source is 'reference' but no "
                  "reference transcript given");
    g.transcript = *reference;
  } else {
    g.transcript = greedy_decode(g.lattice->value);  // no gradient through argmax
  }

  auto pooled = tape.mean_rows(enc);
  auto ling = build_text_encoder(tape, g.transcript);
  auto fused = build_fusion(tape, pooled, ling);
  g.emotion_logits = build_emotion_head(tape, fused);
  return g;
}

audio::FeatureMatrix Model::encoder_forward(const audio::FeatureMatrix& features) {
  Tape tape;
  return build_encoder(tape, features)->value;
}

audio::FeatureMatrix Model::forward_asr_baseline(const audio::FeatureMatrix& features) {
  Tape tape;
  return build_ctc_log_probs(tape, build_encoder(tape, features))->value;
}

Eigen::RowVectorXd Model::forward_ser_baseline(const audio::FeatureMatrix& features) {
  Tape tape;
  auto enc = build_encoder(tape, features);
  auto pooled = tape.mean_rows(enc);
  return build_ser_baseline_head(tape, pooled)->value.row(0);
}

std::string Model::greedy_decode(const Eigen::MatrixXd& log_probs) const {
  return vocab_.decode(nn::ctc_collapse(nn::ctc_greedy_path(log_probs)));
}

Eigen::RowVectorXd mean_pool(const audio::FeatureMatrix& enc) {
  if (enc.rows() == 0)
    throw Error(ErrorCode::EmptyBuffer, "mean_pool: empty input");
  return enc.colwise().mean();
}

}  // namespace asrser::model
