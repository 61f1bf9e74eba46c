#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>

#include "asrser/common.hpp"
#include "asrser/corpus/synth.hpp"
#include "asrser/train/train.hpp"
#include "doctest.h"

using namespace asrser;
namespace fs = std::filesystem;

namespace {

model::ModelConfig tiny_config(model::Architecture arch) {
  model::ModelConfig cfg;
  cfg.n_mels = 8;
  cfg.conv_channels = 6;
  cfg.enc_hidden = 5;
  cfg.embed_dim = 4;
  cfg.text_hidden = 3;
  cfg.ser_mlp_hidden = 7;
  cfg.arch = arch;
  return cfg;
}

audio::MelConfig tiny_mel() {
  audio::MelConfig mel;
  mel.n_mels = 8;
  return mel;
}

// Short rendered utterances keep every test batch cheap.
std::vector<train::TrainItem> tiny_items() {
  std::vector<train::TrainItem> items(2);
  items[0].id = "u0";
  items[0].audio = corpus::render_utterance("fox", 0, corpus::Emotion::happy);
  items[0].transcript = "fox";
  items[0].emotion = corpus::Emotion::happy;
  items[1].id = "u1";
  items[1].audio = corpus::render_utterance("dig", 1, corpus::Emotion::sad);
  items[1].transcript = "dig";
  items[1].emotion = corpus::Emotion::sad;
  return items;
}

std::vector<const train::TrainItem*> as_batch(
    const std::vector<train::TrainItem>& items) {
  std::vector<const train::TrainItem*> batch;
  for (const auto& it : items) batch.push_back(&it);
  return batch;
}

std::string fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("joint loss weighting") {
  train::JointLossConfig cfg;
  cfg.alpha = 0.1;
  CHECK(train::joint_loss(2.0, 10.0, cfg) == doctest::Approx(0.1 * 2 + 0.9 * 10));
  cfg.alpha = 0.0;
  CHECK(train::joint_loss(5.0, 3.0, cfg) == doctest::Approx(3.0));
  cfg.alpha = 1.0;
  CHECK(train::joint_loss(5.0, 3.0, cfg) == doctest::Approx(5.0));
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(train::joint_loss(1.0, 1.0, cfg), Error);
  cfg.alpha = 0.5;
  CHECK_THROWS_AS(
      train::joint_loss(std::numeric_limits<double>::quiet_NaN(), 1.0, cfg),
      Error);
  CHECK_THROWS_AS(train::joint_loss(-1.0, 1.0, cfg), Error);
}

TEST_CASE("train config validation") {
  train::TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = train::TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = train::TrainConfig{};
  cfg.alpha = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = train::TrainConfig{};
  cfg.epochs = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("adam minimizes a quadratic") {
  // loss = (x - 3)^2 on a single scalar parameter
  nn::ParamStore params;
  nn::Tensor& x = params.get_or_create("x", 1, 1);
  x.value(0, 0) = -2.0;
  train::TrainConfig cfg;
  cfg.learning_rate = 0.1;
  train::AdamOptimizer opt(cfg);
  for (int i = 0; i < 500; ++i) {
    x.grad(0, 0) = 2.0 * (x.value(0, 0) - 3.0);
    opt.step(params);
  }
  CHECK(std::fabs(x.value(0, 0) - 3.0) < 1e-3);
}

TEST_CASE("train_step reduces loss on a tiny joint batch") {
  auto items = tiny_items();
  auto batch = as_batch(items);
  model::Model m(tiny_config(model::Architecture::joint), 7);
  train::TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  train::Trainer trainer(m, cfg, tiny_mel());

  double first = trainer.eval_loss(batch).l_joint;
  for (uint64_t s = 0; s < 200; ++s) trainer.train_step(batch, s);
  double last = trainer.eval_loss(batch).l_joint;
  CHECK(last < 0.5 * first);  // at least a 50% reduction when overfitting
}

TEST_CASE("baseline architectures also train") {
  auto items = tiny_items();
  auto batch = as_batch(items);
  for (auto arch :
       {model::Architecture::asr_baseline, model::Architecture::ser_baseline}) {
    model::Model m(tiny_config(arch), 8);
    train::TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.architecture = arch;
    train::Trainer trainer(m, cfg, tiny_mel());
    double first = trainer.eval_loss(batch).l_joint;
    for (uint64_t s = 0; s < 120; ++s) trainer.train_step(batch, s);
    CHECK(trainer.eval_loss(batch).l_joint < first);
  }
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  auto items = tiny_items();
  auto batch = as_batch(items);
  auto run = [&](uint64_t seed) {
    model::Model m(tiny_config(model::Architecture::joint), seed);
    train::TrainConfig cfg;
    cfg.seed = seed;
    cfg.augment_speeds = true;
    train::Trainer trainer(m, cfg, tiny_mel());
    for (uint64_t s = 0; s < 5; ++s) trainer.train_step(batch, s);
    return m.params().items();
  };
  auto a = run(3);
  auto b = run(3);
  REQUIRE(a.size() == b.size());
  for (auto ita = a.begin(), itb = b.begin(); ita != a.end(); ++ita, ++itb) {
    CHECK(ita->first == itb->first);
    CHECK(ita->second.value == itb->second.value);
  }
  auto c = run(4);
  bool any_diff = false;
  for (auto ita = a.begin(), itc = c.begin(); ita != a.end(); ++ita, ++itc)
    if (ita->second.value != itc->second.value) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("empty batch is rejected") {
  model::Model m(tiny_config(model::Architecture::joint), 9);
  train::Trainer trainer(m, train::TrainConfig{}, tiny_mel());
  CHECK_THROWS_AS(trainer.eval_loss({}), Error);
}

TEST_CASE("fit writes stats and checkpoints") {
  auto items = tiny_items();
  model::Model m(tiny_config(model::Architecture::joint), 10);
  train::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  std::string out = fresh_dir("asrser_fit");
  model::CheckpointMeta meta;
  meta.test_speaker = "spkX";
  meta.train_speakers = {"spk0", "spk1"};

  train::FitResult res = train::fit(m, items, cfg, tiny_mel(), out, meta);
  CHECK(res.stats.size() == 2);
  CHECK(fs::exists(res.final_checkpoint));
  CHECK(fs::exists(res.best_checkpoint));
  std::ifstream stats((fs::path(out) / "train_stats.jsonl").string());
  int lines = 0;
  for (std::string line; std::getline(stats, line);)
    if (!line.empty()) ++lines;
  CHECK(lines == 2);

  model::CheckpointMeta back = model::read_checkpoint_meta(res.final_checkpoint);
  CHECK(back.test_speaker == "spkX");
  CHECK(back.train_speakers == meta.train_speakers);
}

TEST_CASE("fit with zero epochs saves the initial model") {
  auto items = tiny_items();
  auto cfgm = tiny_config(model::Architecture::joint);
  model::Model m(cfgm, 11);
  train::TrainConfig cfg;
  cfg.epochs = 0;
  std::string out = fresh_dir("asrser_fit0");
  train::FitResult res =
      train::fit(m, items, cfg, tiny_mel(), out, model::CheckpointMeta{});
  CHECK(res.stats.empty());
  model::Model back = model::load_checkpoint(res.final_checkpoint);
  model::Model fresh(cfgm, 11);
  for (const auto& [name, t] : fresh.params().items()) {
    // float32 storage
    CHECK((t.value - back.params().get(name).value).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("gradient check passes for all architectures") {
  auto items = tiny_items();
  audio::MelConfig mel = tiny_mel();
  struct Case {
    model::Architecture arch;
    model::LinguisticSource src;
  };
  for (const Case& c : {Case{model::Architecture::asr_baseline,
                             model::LinguisticSource::decoded},
                        Case{model::Architecture::ser_baseline,
                             model::LinguisticSource::decoded},
                        Case{model::Architecture::joint,
                             model::LinguisticSource::reference},
                        Case{model::Architecture::joint,
                             model::LinguisticSource::decoded}}) {
    model::Model m(tiny_config(c.arch), 12);
    train::TrainConfig cfg;
    cfg.architecture = c.arch;
    cfg.linguistic_source = c.src;
    train::GradCheckReport report = train::grad_check(m, items, cfg, mel);
    INFO("arch=", static_cast<int>(c.arch), " src=", static_cast<int>(c.src),
         " max_rel_err=", report.max_rel_err);
    CHECK(report.pass);
    CHECK(report.max_rel_err < 1e-4);
    CHECK(!report.groups.empty());
  }
}

TEST_CASE("gradient check negative control fails") {
  auto items = tiny_items();
  model::Model m(tiny_config(model::Architecture::joint), 13);
  train::TrainConfig cfg;
  train::GradCheckReport report =
      train::grad_check(m, items, cfg, tiny_mel(), 1e-5, 1e-4,
                        /*analytic_scale=*/2.0);
  CHECK(!report.pass);
}

TEST_CASE("gradient check refuses large models") {
  model::ModelConfig big;  // defaults: ~hundreds of thousands of parameters
  model::Model m(big, 14);
  auto items = tiny_items();
  train::TrainConfig cfg;
  audio::MelConfig mel;  // 80 mels to match
  CHECK_THROWS_AS(train::grad_check(m, items, cfg, mel), Error);
}

TEST_CASE("speed augmentation draws per-utterance factors deterministically") {
  auto items = tiny_items();
  auto batch = as_batch(items);
  model::Model m1(tiny_config(model::Architecture::joint), 15);
  model::Model m2(tiny_config(model::Architecture::joint), 15);
  train::TrainConfig cfg;
  cfg.seed = 21;
  cfg.augment_speeds = true;
  train::Trainer t1(m1, cfg, tiny_mel());
  train::Trainer t2(m2, cfg, tiny_mel());
  auto l1 = t1.train_step(batch, 0);
  auto l2 = t2.train_step(batch, 0);
  CHECK(l1.l_joint == l2.l_joint);
  // a different step index draws different factors for at least some steps
  model::Model m3(tiny_config(model::Architecture::joint), 15);
  train::Trainer t3(m3, cfg, tiny_mel());
  bool diverged = false;
  for (uint64_t s = 1; s < 6 && !diverged; ++s) {
    model::Model m4(tiny_config(model::Architecture::joint), 15);
    train::Trainer t4(m4, cfg, tiny_mel());
    if (t4.train_step(batch, s).l_joint != l1.l_joint) diverged = true;
  }
  CHECK(diverged);
}

TEST_CASE("load_train_items reads rendered audio") {
  std::string dir = fresh_dir("asrser_items");
  auto synth = corpus::synth_toy_corpus(2, 2, 31, dir);
  auto records = synth.records;
  for (auto& r : records) r.wav = (fs::path(dir) / r.wav).string();
  auto items = train::load_train_items(records);
  REQUIRE(items.size() == records.size());
  for (size_t i = 0; i < items.size(); ++i) {
    CHECK(items[i].id == records[i].id);
    CHECK(items[i].transcript == records[i].transcript);
    CHECK(!items[i].audio.samples.empty());
  }
}
