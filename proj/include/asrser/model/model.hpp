// The three architectures: ASR baseline (encoder + CTC head), SER baseline
// (encoder + mean pool + MLP head) and the joint model (shared encoder, CTC
// branch, text encoder over the transcript, skip-connection fusion, emotion
// head).
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "asrser/audio/mel.hpp"
#include "asrser/model/vocab.hpp"
#include "asrser/nn/autodiff.hpp"

namespace asrser::model {

constexpr int kNumEmotionClasses = 4;  // neutral, happy, sad, angry

enum class Architecture { asr_baseline, ser_baseline, joint };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

enum class LinguisticSource { decoded, reference };

std::string to_string(LinguisticSource s);
LinguisticSource linguistic_source_from_string(const std::string& s);

struct ModelConfig {
  int n_mels = 80;
  int conv_channels = 64;
  int enc_hidden = 64;   // acoustic dim D_a = 2 * enc_hidden
  int embed_dim = 32;
  int text_hidden = 32;  // linguistic dim D_l = 2 * text_hidden
  int ser_mlp_hidden = 64;
  Architecture arch = Architecture::joint;
  bool freeze_frontend = false;

  int d_a() const { return 2 * enc_hidden; }
  int d_l() const { return 2 * text_hidden; }
};

// Graph handles of one forward pass; the tape they were built on must
// outlive them.
struct JointGraph {
  nn::NodePtr lattice;               // T' x |Vocab| log-probs (asr/joint)
  std::string transcript;            // linguistic branch input (joint)
  nn::NodePtr emotion_logits;        // 1 x 4 (ser/joint)
};

class Model {
 public:
  Model(const ModelConfig& cfg, uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Graph builders. features: T x n_mels with T >= 4.
  nn::NodePtr build_encoder(nn::Tape& tape, const audio::FeatureMatrix& features);
  nn::NodePtr build_ctc_log_probs(nn::Tape& tape, const nn::NodePtr& enc);
  nn::NodePtr build_text_encoder(nn::Tape& tape, const std::string& transcript);
  nn::NodePtr build_fusion(nn::Tape& tape, const nn::NodePtr& acoustic,
                           const nn::NodePtr& linguistic);
  nn::NodePtr build_ser_baseline_head(nn::Tape& tape, const nn::NodePtr& pooled);
  nn::NodePtr build_emotion_head(nn::Tape& tape, const nn::NodePtr& fused);

  // Full joint pass. With LinguisticSource::decoded the transcript comes
  // from greedy CTC decoding and no gradient flows through the decode step;
  // with reference the caller must pass the reference transcript.
  JointGraph build_joint(nn::Tape& tape, const audio::FeatureMatrix& features,
                         LinguisticSource source,
                         const std::optional<std::string>& reference);

  // Convenience value-level forwards.
  audio::FeatureMatrix encoder_forward(const audio::FeatureMatrix& features);
  audio::FeatureMatrix forward_asr_baseline(const audio::FeatureMatrix& features);
  Eigen::RowVectorXd forward_ser_baseline(const audio::FeatureMatrix& features);

  std::string greedy_decode(const Eigen::MatrixXd& log_probs) const;

 private:
  nn::NodePtr weight(nn::Tape& tape, const std::string& name, bool frozen = false);

  ModelConfig cfg_;
  Vocab vocab_;
  nn::ParamStore params_;
};

// Arithmetic mean over time; errors on empty input.
Eigen::RowVectorXd mean_pool(const audio::FeatureMatrix& enc);

}  // namespace asrser::model
