// Joint loss, optimizer, training loops and numerical gradient checking.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "asrser/audio/mel.hpp"
#include "asrser/audio/signal.hpp"
#include "asrser/audio/wav.hpp"
#include "asrser/corpus/manifest.hpp"
#include "asrser/model/checkpoint.hpp"
#include "asrser/model/model.hpp"

namespace asrser::train {

struct JointLossConfig {
  double alpha = 0.1;
};

// joint = alpha * ser + (1 - alpha) * asr
double joint_loss(double l_ser, double l_asr, const JointLossConfig& cfg);

struct LossBreakdown {
  double l_ser = 0.0;
  double l_asr = 0.0;
  double l_joint = 0.0;
};

struct TrainConfig {
  uint64_t seed = 0;
  int epochs = 300;
  int batch_size = 4;
  double learning_rate = 1e-3;
  double grad_clip_norm = 5.0;
  bool augment_speeds = false;  // speed factors 95/100/105, one per utterance
  model::Architecture architecture = model::Architecture::joint;
  model::LinguisticSource linguistic_source = model::LinguisticSource::decoded;
  double alpha = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct TrainItem {
  std::string id;
  audio::AudioBuffer audio;
  std::string transcript;
  corpus::Emotion emotion = corpus::Emotion::neutral;
};

// Reads each record's wav into memory.
std::vector<TrainItem> load_train_items(
    const std::vector<corpus::UtteranceRecord>& records);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(const TrainConfig& cfg) : cfg_(cfg) {}
  void step(nn::ParamStore& params);

 private:
  TrainConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, nn::Mat> m_, v_;
};

class Trainer {
 public:
  Trainer(model::Model& model, const TrainConfig& cfg,
          const audio::MelConfig& mel);

  // One optimizer update on a batch. step_index seeds the augmentation draw.
  LossBreakdown train_step(const std::vector<const TrainItem*>& batch,
                           uint64_t step_index);

  // Loss of a batch without touching parameters.
  LossBreakdown eval_loss(const std::vector<const TrainItem*>& batch);

 private:
  LossBreakdown run_batch(const std::vector<const TrainItem*>& batch,
                          uint64_t step_index, bool update);

  model::Model& model_;
  TrainConfig cfg_;
  audio::MelConfig mel_;
  AdamOptimizer opt_;
};

struct EpochStats {
  int epoch = 0;
  double mean_l_ser = 0.0;
  double mean_l_asr = 0.0;
  double mean_l_joint = 0.0;
  double wall_s = 0.0;
};

struct FitResult {
  std::vector<EpochStats> stats;
  std::string final_checkpoint;
  std::string best_checkpoint;  // lowest mean train loss
};

// Seeded epoch shuffling; writes train_stats.jsonl plus final/best
// checkpoints under out_dir.
FitResult fit(model::Model& model, const std::vector<TrainItem>& corpus,
              const TrainConfig& cfg, const audio::MelConfig& mel,
              const std::string& out_dir, const model::CheckpointMeta& meta);

struct GradCheckGroup {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_rel_err = 0.0;
  bool pass = false;
};

// Central finite differences against the analytic gradient for every
// parameter group. For the joint architecture the linguistic transcript is
// frozen at the base point, matching the gradient-blocked decode.
// analytic_scale multiplies the analytic gradient before comparison; it is
// a negative-control hook for tests and must stay 1.0 otherwise.
GradCheckReport grad_check(model::Model& model,
                           const std::vector<TrainItem>& batch,
                           const TrainConfig& cfg, const audio::MelConfig& mel,
                           double eps = 1e-5, double tol = 1e-4,
                           double analytic_scale = 1.0);

}  // namespace asrser::train
