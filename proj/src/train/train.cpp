#include "asrser/train/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "asrser/common.hpp"
#include "asrser/nn/ctc.hpp"
#include "json.hpp"

namespace asrser::train {

namespace fs = std::filesystem;
using model::Architecture;
using model::LinguisticSource;
using nn::Tape;

double joint_loss(double l_ser, double l_asr, const JointLossConfig& cfg) {
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    throw Error(ErrorCode::BadConfig,
                "alpha must be in [0,1], got " + std::to_string(cfg.alpha));
  if (!std::isfinite(l_ser) || !std::isfinite(l_asr) || l_ser < 0 || l_asr < 0)
    throw Error(ErrorCode::NonFiniteLoss, "joint_loss: invalid loss inputs");
  return cfg.alpha * l_ser + (1.0 - cfg.alpha) * l_asr;
}

void TrainConfig::validate() const {
  if (epochs < 0 || batch_size <= 0 || learning_rate <= 0.0 ||
      grad_clip_norm <= 0.0 || alpha < 0.0 || alpha > 1.0)
    throw Error(ErrorCode::BadConfig, "invalid training configuration");
}

std::vector<TrainItem> load_train_items(
    const std::vector<corpus::UtteranceRecord>& records) {
  std::vector<TrainItem> items;
  items.reserve(records.size());
  for (const auto& r : records) {
    TrainItem item;
    item.id = r.id;
    item.audio = audio::load_wav(r.wav);
    item.transcript = r.transcript;
    item.emotion = r.emotion;
    items.push_back(std::move(item));
  }
  return items;
}

void AdamOptimizer::step(nn::ParamStore& params) {
  ++t_;
  const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (auto& [name, p] : params.items()) {
    auto mit = m_.find(name);
    if (mit == m_.end()) {
      m_[name] = nn::Mat::Zero(p.value.rows(), p.value.cols());
      v_[name] = nn::Mat::Zero(p.value.rows(), p.value.cols());
      mit = m_.find(name);
    }
    nn::Mat& m = mit->second;
    nn::Mat& v = v_[name];
    m = b1 * m + (1.0 - b1) * p.grad;
    v = b2 * v + (1.0 - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= cfg_.learning_rate * (m.array() / bc1) /
                       ((v.array() / bc2).sqrt() + cfg_.adam_eps);
  }
}

Trainer::Trainer(model::Model& model, const TrainConfig& cfg,
                 const audio::MelConfig& mel)
    : model_(model), cfg_(cfg), mel_(mel), opt_(cfg) {
  cfg_.validate();
}

LossBreakdown Trainer::train_step(const std::vector<const TrainItem*>& batch,
                                  uint64_t step_index) {
  return run_batch(batch, step_index, /*update=*/true);
}

LossBreakdown Trainer::eval_loss(const std::vector<const TrainItem*>& batch) {
  return run_batch(batch, 0, /*update=*/false);
}

LossBreakdown Trainer::run_batch(const std::vector<const TrainItem*>& batch,
                                 uint64_t step_index, bool update) {
  if (batch.empty())
    throw Error(ErrorCode::BadConfig, "empty training batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  if (update) model_.params().zero_grad();

  LossBreakdown total;
  for (const TrainItem* item : batch) {
    audio::AudioBuffer buf = item->audio;
    if (update && cfg_.augment_speeds) {
      static const int factors[3] = {95, 100, 105};
      Rng rng(derive_seed(cfg_.seed ^ (step_index * 0x9e3779b9ULL), item->id));
      buf = audio::speed_perturb(buf, factors[rng.uniform_index(3)]);
    }
    audio::FeatureMatrix feats = audio::log_mel(buf, mel_);

    Tape tape;
    nn::NodePtr loss;
    LossBreakdown bd;
    switch (cfg_.architecture) {
      case Architecture::asr_baseline: {
        auto enc = model_.build_encoder(tape, feats);
        auto lattice = model_.build_ctc_log_probs(tape, enc);
        loss = tape.ctc_loss(lattice, model_.vocab().encode(item->transcript));
        bd.l_asr = loss->value(0, 0);
        bd.l_joint = bd.l_asr;
        break;
      }
      case Architecture::ser_baseline: {
        auto enc = model_.build_encoder(tape, feats);
        auto pooled = tape.mean_rows(enc);
        auto logits = model_.build_ser_baseline_head(tape, pooled);
        loss = tape.cross_entropy(logits, static_cast<int>(item->emotion));
        bd.l_ser = loss->value(0, 0);
        bd.l_joint = bd.l_ser;
        break;
      }
      case Architecture::joint: {
        auto g = model_.build_joint(tape, feats, cfg_.linguistic_source,
                                    item->transcript);
        auto l_asr = tape.ctc_loss(g.lattice, model_.vocab().encode(item->transcript));
        auto l_ser = tape.cross_entropy(g.emotion_logits,
                                        static_cast<int>(item->emotion));
        loss = tape.scale_add(l_ser, cfg_.alpha, l_asr, 1.0 - cfg_.alpha);
        bd.l_ser = l_ser->value(0, 0);
        bd.l_asr = l_asr->value(0, 0);
        bd.l_joint = loss->value(0, 0);
        break;
      }
    }
    if (!std::isfinite(bd.l_joint))
      throw Error(ErrorCode::NonFiniteLoss,
                  "non-finite loss on utterance " + item->id);
    if (update) tape.backward(loss, inv_n);
    total.l_ser += bd.l_ser * inv_n;
    total.l_asr += bd.l_asr * inv_n;
    total.l_joint += bd.l_joint * inv_n;
  }

  if (update) {
    model_.params().clip_grad(cfg_.grad_clip_norm);
    opt_.step(model_.params());
  }
  return total;
}

FitResult fit(model::Model& model, const std::vector<TrainItem>& corpus,
              const TrainConfig& cfg, const audio::MelConfig& mel,
              const std::string& out_dir, const model::CheckpointMeta& meta) {
  cfg.validate();
  if (corpus.empty())
    throw Error(ErrorCode::BadConfig, "fit: empty training split");
  fs::create_directories(out_dir);

  Trainer trainer(model, cfg, mel);
  FitResult result;
  result.final_checkpoint = (fs::path(out_dir) / "ckpt_final.bin").string();
  result.best_checkpoint = (fs::path(out_dir) / "ckpt_best.bin").string();

  std::ofstream stats_out((fs::path(out_dir) / "train_stats.jsonl").string());
  double best_loss = std::numeric_limits<double>::infinity();
  uint64_t step_index = 0;

  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(cfg.seed, "epoch" + std::to_string(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    EpochStats stats;
    stats.epoch = epoch;
    size_t n_batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      std::vector<const TrainItem*> batch;
      for (size_t i = start;
           i < std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
           ++i)
        batch.push_back(&corpus[order[i]]);
      LossBreakdown bd = trainer.train_step(batch, step_index++);
      stats.mean_l_ser += bd.l_ser;
      stats.mean_l_asr += bd.l_asr;
      stats.mean_l_joint += bd.l_joint;
      ++n_batches;
    }
    stats.mean_l_ser /= static_cast<double>(n_batches);
    stats.mean_l_asr /= static_cast<double>(n_batches);
    stats.mean_l_joint /= static_cast<double>(n_batches);
    stats.wall_s = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    result.stats.push_back(stats);

    nlohmann::json j;
    j["epoch"] = stats.epoch;
    j["mean_l_ser"] = stats.mean_l_ser;
    j["mean_l_asr"] = stats.mean_l_asr;
    j["mean_l_joint"] = stats.mean_l_joint;
    // wall_s stays in-memory only so reruns produce identical bytes
    stats_out << j.dump() << "\n";

    if (stats.mean_l_joint < best_loss) {
      best_loss = stats.mean_l_joint;
      model::save_checkpoint(result.best_checkpoint, model, meta);
    }
  }

  model::save_checkpoint(result.final_checkpoint, model, meta);
  if (cfg.epochs == 0)
    model::save_checkpoint(result.best_checkpoint, model, meta);
  return result;
}

namespace {

// Scalar training objective of a batch at the current parameters, with the
// joint linguistic transcript frozen to `frozen_texts`.
double closure_loss(model::Model& model, const TrainConfig& cfg,
                    const std::vector<audio::FeatureMatrix>& feats,
                    const std::vector<TrainItem>& batch,
                    const std::vector<std::string>& frozen_texts,
                    bool do_backward, double inv_n) {
  double total = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    Tape tape;
    nn::NodePtr loss;
    switch (cfg.architecture) {
      case Architecture::asr_baseline: {
        auto enc = model.build_encoder(tape, feats[i]);
        auto lattice = model.build_ctc_log_probs(tape, enc);
        loss = tape.ctc_loss(lattice, model.vocab().encode(batch[i].transcript));
        break;
      }
      case Architecture::ser_baseline: {
        auto enc = model.build_encoder(tape, feats[i]);
        auto logits =
            model.build_ser_baseline_head(tape, tape.mean_rows(enc));
        loss = tape.cross_entropy(logits, static_cast<int>(batch[i].emotion));
        break;
      }
      case Architecture::joint: {
        auto g = model.build_joint(tape, feats[i], LinguisticSource::reference,
                                   frozen_texts[i]);
        auto l_asr =
            tape.ctc_loss(g.lattice, model.vocab().encode(batch[i].transcript));
        auto l_ser = tape.cross_entropy(g.emotion_logits,
                                        static_cast<int>(batch[i].emotion));
        loss = tape.scale_add(l_ser, cfg.alpha, l_asr, 1.0 - cfg.alpha);
        break;
      }
    }
    if (do_backward) tape.backward(loss, inv_n);
    total += loss->value(0, 0) * inv_n;
  }
  return total;
}

}  // namespace

GradCheckReport grad_check(model::Model& model,
                           const std::vector<TrainItem>& batch,
                           const TrainConfig& cfg, const audio::MelConfig& mel,
                           double eps, double tol, double analytic_scale) {
  if (model.params().count() > 10000)
    throw Error(ErrorCode::BadConfig,
                "grad_check expects a small model (<= 1e4 parameters), got " +
                    std::to_string(model.params().count()));

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<audio::FeatureMatrix> feats;
  std::vector<std::string> frozen_texts;
  for (const auto& item : batch) {
    feats.push_back(audio::log_mel(item.audio, mel));
    if (cfg.architecture == Architecture::joint) {
      if (cfg.linguistic_source == LinguisticSource::reference) {
        frozen_texts.push_back(item.transcript);
      } else {
        // gradient is blocked at the decode step, so freeze the transcript
        // at the base point for both the analytic and FD evaluations
        Tape tape;
        auto g = model.build_joint(tape, feats.back(),
                                   LinguisticSource::decoded, std::nullopt);
        frozen_texts.push_back(g.transcript);
      }
    } else {
      frozen_texts.emplace_back();
    }
  }

  model.params().zero_grad();
  closure_loss(model, cfg, feats, batch, frozen_texts, /*do_backward=*/true,
               inv_n);

  GradCheckReport report;
  for (auto& [name, p] : model.params().items()) {
    if (model.config().freeze_frontend && name.rfind("enc.conv", 0) == 0)
      continue;  // frozen front end receives no gradient
    GradCheckGroup group;
    group.name = name;
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        const double orig = p.value(r, c);
        p.value(r, c) = orig + eps;
        double lp = closure_loss(model, cfg, feats, batch, frozen_texts, false,
                                 inv_n);
        p.value(r, c) = orig - eps;
        double lm = closure_loss(model, cfg, feats, batch, frozen_texts, false,
                                 inv_n);
        p.value(r, c) = orig;

        const double fd = (lp - lm) / (2.0 * eps);
        const double an = analytic_scale * p.grad(r, c);
        const double rel = std::fabs(an - fd) /
                           std::max(std::fabs(an) + std::fabs(fd), 1e-4);
        group.max_rel_err = std::max(group.max_rel_err, rel);
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, group.max_rel_err);
    report.groups.push_back(std::move(group));
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace asrser::train
