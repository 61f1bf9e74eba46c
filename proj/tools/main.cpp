// asrser command-line tool: synth-corpus, mix, train, evaluate, gradcheck,
// report. All logs are line-oriented JSON on stdout; failures print one
// machine-readable error line on stderr and exit nonzero.
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "asrser/audio/mel.hpp"
#include "asrser/common.hpp"
#include "asrser/corpus/folds.hpp"
#include "asrser/corpus/manifest.hpp"
#include "asrser/corpus/noise.hpp"
#include "asrser/corpus/synth.hpp"
#include "asrser/eval/report.hpp"
#include "asrser/model/checkpoint.hpp"
#include "asrser/train/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace asrser;

namespace {

// Every knob of the pipeline in one place. JSON config fields share these
// names; any CLI flag overrides the corresponding field. Env var overrides
// use the ASRSER_ prefix (e.g. ASRSER_SEED).
struct RunConfig {
  uint64_t seed = 7;
  std::string out_dir = "run";

  // corpus
  int speakers = 2;
  int per_speaker = 4;

  // noise pools
  int noise_clips = 3;
  double noise_clip_s = 3.0;

  // features
  int n_mels = 80;

  // model
  int conv_channels = 64;
  int enc_hidden = 64;
  int embed_dim = 32;
  int text_hidden = 32;
  int ser_mlp_hidden = 64;
  bool freeze_frontend = false;

  // training
  int epochs = 300;
  int batch_size = 4;
  double learning_rate = 1e-3;
  double grad_clip_norm = 5.0;
  double alpha = 0.1;
  bool augment_speeds = false;
  std::string architecture = "joint";
  std::string linguistic_source = "decoded";
  std::string trained_on = "clean";
};

json config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["speakers"] = c.speakers;
  j["per_speaker"] = c.per_speaker;
  j["noise_clips"] = c.noise_clips;
  j["noise_clip_s"] = c.noise_clip_s;
  j["n_mels"] = c.n_mels;
  j["conv_channels"] = c.conv_channels;
  j["enc_hidden"] = c.enc_hidden;
  j["embed_dim"] = c.embed_dim;
  j["text_hidden"] = c.text_hidden;
  j["ser_mlp_hidden"] = c.ser_mlp_hidden;
  j["freeze_frontend"] = c.freeze_frontend;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["grad_clip_norm"] = c.grad_clip_norm;
  j["alpha"] = c.alpha;
  j["augment_speeds"] = c.augment_speeds;
  j["architecture"] = c.architecture;
  j["linguistic_source"] = c.linguistic_source;
  j["trained_on"] = c.trained_on;
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::BadConfig,
                  std::string("config field '") + key + "' has the wrong type");
    }
  }
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  static const std::set<std::string> known = {
      "seed",          "out_dir",       "speakers",       "per_speaker",
      "noise_clips",   "noise_clip_s",  "n_mels",         "conv_channels",
      "enc_hidden",    "embed_dim",     "text_hidden",    "ser_mlp_hidden",
      "freeze_frontend", "epochs",      "batch_size",     "learning_rate",
      "grad_clip_norm", "alpha",        "augment_speeds", "architecture",
      "linguistic_source", "trained_on", "config_hash"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw Error(ErrorCode::BadConfig, "unknown config field '" + key + "'");
  maybe(j, "seed", c.seed);
  maybe(j, "out_dir", c.out_dir);
  maybe(j, "speakers", c.speakers);
  maybe(j, "per_speaker", c.per_speaker);
  maybe(j, "noise_clips", c.noise_clips);
  maybe(j, "noise_clip_s", c.noise_clip_s);
  maybe(j, "n_mels", c.n_mels);
  maybe(j, "conv_channels", c.conv_channels);
  maybe(j, "enc_hidden", c.enc_hidden);
  maybe(j, "embed_dim", c.embed_dim);
  maybe(j, "text_hidden", c.text_hidden);
  maybe(j, "ser_mlp_hidden", c.ser_mlp_hidden);
  maybe(j, "freeze_frontend", c.freeze_frontend);
  maybe(j, "epochs", c.epochs);
  maybe(j, "batch_size", c.batch_size);
  maybe(j, "learning_rate", c.learning_rate);
  maybe(j, "grad_clip_norm", c.grad_clip_norm);
  maybe(j, "alpha", c.alpha);
  maybe(j, "augment_speeds", c.augment_speeds);
  maybe(j, "architecture", c.architecture);
  maybe(j, "linguistic_source", c.linguistic_source);
  maybe(j, "trained_on", c.trained_on);
  return c;
}

uint64_t config_hash(const RunConfig& c) { return fnv1a(config_to_json(c).dump()); }

void persist_config(const RunConfig& c, const fs::path& dir,
                    const std::string& subcommand) {
  fs::create_directories(dir);
  json j = config_to_json(c);
  j["config_hash"] = config_hash(c);
  std::ofstream out((dir / ("config_" + subcommand + ".json")).string());
  out << j.dump(2) << "\n";
}

void log_event(const json& fields) { std::cout << fields.dump() << "\n"; }

audio::MelConfig mel_config(const RunConfig& c) {
  audio::MelConfig mel;
  mel.n_mels = c.n_mels;
  return mel;
}

model::ModelConfig model_config(const RunConfig& c,
                                const std::string& architecture) {
  model::ModelConfig m;
  m.n_mels = c.n_mels;
  m.conv_channels = c.conv_channels;
  m.enc_hidden = c.enc_hidden;
  m.embed_dim = c.embed_dim;
  m.text_hidden = c.text_hidden;
  m.ser_mlp_hidden = c.ser_mlp_hidden;
  m.freeze_frontend = c.freeze_frontend;
  m.arch = model::architecture_from_string(architecture);
  return m;
}

// Manifest wav paths may be relative to the manifest's directory.
std::vector<corpus::UtteranceRecord> load_records(const fs::path& dir) {
  auto records = corpus::load_manifest((dir / "manifest.jsonl").string());
  for (auto& r : records) {
    if (!fs::path(r.wav).is_absolute() && !fs::exists(r.wav))
      r.wav = (dir / r.wav).string();
  }
  return records;
}

fs::path corpus_dir(const RunConfig& c) { return fs::path(c.out_dir) / "corpus"; }
fs::path noisy_dir(const RunConfig& c) {
  return fs::path(c.out_dir) / "train_noisy";
}
fs::path scenarios_dir(const RunConfig& c) {
  return fs::path(c.out_dir) / "scenarios";
}
fs::path fold_dir(const RunConfig& c, const std::string& arch,
                  const std::string& cond, size_t k,
                  const std::string& speaker) {
  return fs::path(c.out_dir) / "train" / (arch + "-" + cond) /
         ("fold" + std::to_string(k) + "-" + speaker);
}

int cmd_synth_corpus(const RunConfig& cfg) {
  persist_config(cfg, cfg.out_dir, "synth-corpus");
  auto result = corpus::synth_toy_corpus(cfg.speakers, cfg.per_speaker, cfg.seed,
                                         corpus_dir(cfg).string());
  log_event({{"event", "synth-corpus"},
             {"utterances", result.records.size()},
             {"manifest", result.manifest_path}});
  return 0;
}

int cmd_mix(const RunConfig& cfg) {
  persist_config(cfg, cfg.out_dir, "mix");
  fs::path train_pool_dir = fs::path(cfg.out_dir) / "noise_train";
  fs::path test_pool_dir = fs::path(cfg.out_dir) / "noise_test";
  // disjoint pools: training noise clips are never reused in test scenarios
  corpus::synth_noise_pool(train_pool_dir.string(),
                           derive_seed(cfg.seed, "noise-train"), cfg.noise_clips,
                           cfg.noise_clip_s);
  corpus::synth_noise_pool(test_pool_dir.string(),
                           derive_seed(cfg.seed, "noise-test"), cfg.noise_clips,
                           cfg.noise_clip_s);
  corpus::NoisePool train_pool(train_pool_dir.string());
  corpus::NoisePool test_pool(test_pool_dir.string());

  auto records = load_records(corpus_dir(cfg));
  auto corrupt = corpus::corrupt_training_set(records, train_pool, cfg.seed,
                                              noisy_dir(cfg).string());
  log_event({{"event", "mix-train"}, {"utterances", corrupt.records.size()}});
  auto scenarios = corpus::build_test_scenarios(records, test_pool, cfg.seed,
                                                scenarios_dir(cfg).string());
  for (const auto& s : scenarios)
    log_event({{"event", "mix-scenario"},
               {"scenario", s.name},
               {"utterances", s.records.size()}});
  return 0;
}

int train_one_fold(const RunConfig& cfg, const corpus::FoldPlan& plan,
                   size_t k, const std::vector<corpus::UtteranceRecord>& records) {
  const corpus::Fold& fold = plan.folds[k];
  std::set<std::string> train_ids(fold.train_ids.begin(), fold.train_ids.end());
  std::vector<corpus::UtteranceRecord> train_records;
  for (const auto& r : records)
    if (train_ids.count(r.id)) train_records.push_back(r);

  const std::string scope =
      cfg.architecture + "/" + cfg.trained_on + "/" + fold.test_speaker;
  model::Model m(model_config(cfg, cfg.architecture),
                 derive_seed(cfg.seed, "init/" + scope));

  train::TrainConfig tc;
  tc.seed = derive_seed(cfg.seed, "train/" + scope);
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = cfg.learning_rate;
  tc.grad_clip_norm = cfg.grad_clip_norm;
  tc.alpha = cfg.alpha;
  tc.augment_speeds = cfg.augment_speeds;
  tc.architecture = model::architecture_from_string(cfg.architecture);
  tc.linguistic_source =
      model::linguistic_source_from_string(cfg.linguistic_source);

  model::CheckpointMeta meta;
  meta.test_speaker = fold.test_speaker;
  meta.config_hash = config_hash(cfg);
  for (const auto& f : plan.folds)
    if (f.test_speaker != fold.test_speaker)
      meta.train_speakers.push_back(f.test_speaker);

  fs::path out =
      fold_dir(cfg, cfg.architecture, cfg.trained_on, k, fold.test_speaker);
  persist_config(cfg, out, "train");

  auto items = train::load_train_items(train_records);
  auto result = train::fit(m, items, tc, mel_config(cfg), out.string(), meta);
  log_event({{"event", "train"},
             {"arch", cfg.architecture},
             {"trained_on", cfg.trained_on},
             {"fold", k},
             {"test_speaker", fold.test_speaker},
             {"epochs", result.stats.size()},
             {"final_loss",
              result.stats.empty() ? 0.0 : result.stats.back().mean_l_joint},
             {"checkpoint", result.final_checkpoint}});
  return 0;
}

// Re-invokes this binary once per fold, at most `jobs` at a time.
int spawn_folds(const RunConfig& cfg, size_t n_folds, int jobs,
                const std::string& config_path) {
  char exe[4096];
  ssize_t n = readlink("/proc/self/exe", exe, sizeof(exe) - 1);
  if (n <= 0) throw Error(ErrorCode::IoError, "cannot resolve own executable");
  exe[n] = '\0';

  size_t next = 0;
  int running = 0, failures = 0;
  std::vector<pid_t> pids;
  while (next < n_folds || running > 0) {
    while (next < n_folds && running < jobs) {
      std::string fold_arg = std::to_string(next);
      pid_t pid = fork();
      if (pid < 0) throw Error(ErrorCode::IoError, "fork failed");
      if (pid == 0) {
        execl(exe, exe, "train", "--config", config_path.c_str(), "--fold",
              fold_arg.c_str(), "--arch", cfg.architecture.c_str(),
              "--trained-on", cfg.trained_on.c_str(), "--out",
              cfg.out_dir.c_str(), static_cast<char*>(nullptr));
        _exit(127);
      }
      log_event({{"event", "spawn-fold"}, {"fold", next}, {"pid", pid}});
      pids.push_back(pid);
      ++next;
      ++running;
    }
    int status = 0;
    pid_t done = wait(&status);
    if (done > 0) {
      --running;
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) ++failures;
    }
  }
  if (failures > 0)
    throw Error(ErrorCode::BadConfig,
                std::to_string(failures) + " fold process(es) failed");
  return 0;
}

int cmd_train(const RunConfig& cfg, int fold, bool all_folds, int jobs) {
  if (cfg.trained_on != "clean" && cfg.trained_on != "noise")
    throw Error(ErrorCode::BadConfig,
                "trained_on must be clean or noise, got " + cfg.trained_on);
  model::architecture_from_string(cfg.architecture);  // validates

  fs::path data_dir =
      cfg.trained_on == "clean" ? corpus_dir(cfg) : noisy_dir(cfg);
  auto records = load_records(data_dir);
  auto plan = corpus::make_loso_folds(records);

  if (all_folds) {
    // persist one effective config for the child processes to share
    fs::path cfg_dir = fs::path(cfg.out_dir) / "train";
    persist_config(cfg, cfg_dir, "train-all");
    return spawn_folds(cfg, plan.folds.size(), jobs,
                       (cfg_dir / "config_train-all.json").string());
  }
  if (fold < 0 || static_cast<size_t>(fold) >= plan.folds.size())
    throw Error(ErrorCode::BadConfig,
                "fold " + std::to_string(fold) + " out of range [0, " +
                    std::to_string(plan.folds.size()) + ")");
  return train_one_fold(cfg, plan, static_cast<size_t>(fold), records);
}

int cmd_evaluate(const RunConfig& cfg) {
  persist_config(cfg, fs::path(cfg.out_dir) / "eval", "evaluate");
  auto clean_records = load_records(corpus_dir(cfg));
  auto plan = corpus::make_loso_folds(clean_records);

  std::vector<corpus::ScenarioSet> scenarios;
  for (const auto& name : corpus::scenario_names()) {
    corpus::ScenarioSet set;
    set.name = name;
    set.records = load_records(scenarios_dir(cfg) / name);
    scenarios.push_back(std::move(set));
  }

  eval::CheckpointSet checkpoints;
  for (const std::string arch : {"asr_baseline", "ser_baseline", "joint"}) {
    for (const std::string cond : {"clean", "noise"}) {
      for (size_t k = 0; k < plan.folds.size(); ++k) {
        fs::path ck = fold_dir(cfg, arch, cond, k, plan.folds[k].test_speaker) /
                      "ckpt_final.bin";
        if (!fs::exists(ck))
          throw Error(ErrorCode::FileNotFound,
                      "missing checkpoint " + ck.string() +
                          " (run `train --all-folds` for every architecture "
                          "and training condition first)");
        checkpoints.add(arch, cond, plan.folds[k].test_speaker, ck.string());
      }
    }
  }

  eval::EvalReport report =
      eval::evaluate_scenarios(checkpoints, scenarios, plan, mel_config(cfg));
  report.config_hash = config_hash(cfg);
  fs::path out = fs::path(cfg.out_dir) / "eval";
  eval::emit_report(report, out.string());
  log_event({{"event", "evaluate"},
             {"cells", report.cells.size()},
             {"report", (out / "report.json").string()}});
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg) {
  persist_config(cfg, fs::path(cfg.out_dir) / "gradcheck", "gradcheck");
  // a deliberately tiny model: finite differences need few parameters
  model::ModelConfig mc;
  mc.n_mels = 8;
  mc.conv_channels = 6;
  mc.enc_hidden = 5;
  mc.embed_dim = 4;
  mc.text_hidden = 3;
  mc.ser_mlp_hidden = 7;
  audio::MelConfig mel;
  mel.n_mels = 8;

  std::vector<train::TrainItem> batch(2);
  batch[0].id = "g0";
  batch[0].audio = corpus::render_utterance("fox", 0, corpus::Emotion::happy);
  batch[0].transcript = "fox";
  batch[0].emotion = corpus::Emotion::happy;
  batch[1].id = "g1";
  batch[1].audio = corpus::render_utterance("dig", 1, corpus::Emotion::sad);
  batch[1].transcript = "dig";
  batch[1].emotion = corpus::Emotion::sad;

  bool all_pass = true;
  for (const std::string arch : {"asr_baseline", "ser_baseline", "joint"}) {
    mc.arch = model::architecture_from_string(arch);
    model::Model m(mc, derive_seed(cfg.seed, "gradcheck/" + arch));
    train::TrainConfig tc;
    tc.architecture = mc.arch;
    tc.alpha = cfg.alpha;
    tc.linguistic_source =
        model::linguistic_source_from_string(cfg.linguistic_source);
    auto report = train::grad_check(m, batch, tc, mel);
    log_event({{"event", "gradcheck"},
               {"arch", arch},
               {"max_rel_err", report.max_rel_err},
               {"pass", report.pass}});
    all_pass = all_pass && report.pass;
  }
  if (!all_pass)
    throw Error(ErrorCode::NonFiniteLoss, "gradient check failed");
  return 0;
}

int cmd_report(const RunConfig& cfg) {
  fs::path src = fs::path(cfg.out_dir) / "eval" / "report.json";
  std::ifstream in(src);
  if (!in)
    throw Error(ErrorCode::FileNotFound,
                "no evaluation report at " + src.string() + " (run evaluate)");
  eval::EvalReport report = eval::report_from_json(json::parse(in));
  fs::path out = fs::path(cfg.out_dir) / "report";
  eval::emit_report(report, out.string());
  persist_config(cfg, out, "report");
  log_event({{"event", "report"}, {"dir", out.string()}});
  return 0;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "file_not_found";
    case ErrorCode::NotMono: return "not_mono";
    case ErrorCode::UnsupportedEncoding: return "unsupported_encoding";
    case ErrorCode::EmptyAudio: return "empty_audio";
    case ErrorCode::EmptyBuffer: return "empty_buffer";
    case ErrorCode::ZeroEnergy: return "zero_energy";
    case ErrorCode::SampleRateMismatch: return "sample_rate_mismatch";
    case ErrorCode::BadSpeedFactor: return "bad_speed_factor";
    case ErrorCode::BufferTooShort: return "buffer_too_short";
    case ErrorCode::BadManifestLine: return "bad_manifest_line";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::UnknownEmotion: return "unknown_emotion";
    case ErrorCode::SingleSpeaker: return "single_speaker";
    case ErrorCode::EmptyNoiseCategory: return "empty_noise_category";
    case ErrorCode::InfeasibleTarget: return "infeasible_target";
    case ErrorCode::BadVocabChar: return "bad_vocab_char";
    case ErrorCode::MissingReference: return "missing_reference";
    case ErrorCode::NonFiniteLoss: return "non_finite_loss";
    case ErrorCode::EmptyReference: return "empty_reference";
    case ErrorCode::LengthMismatch: return "length_mismatch";
    case ErrorCode::BadConfig: return "bad_config";
    case ErrorCode::LeakageDetected: return "leakage_detected";
    case ErrorCode::IncompleteReport: return "incomplete_report";
    case ErrorCode::IoError: return "io_error";
  }
  return "unknown";
}

}  // namespace

int main(int argc, char** argv) {
  // --config is applied before flag parsing so that flags override it
  RunConfig cfg;
  std::string config_path;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in)
        throw Error(ErrorCode::FileNotFound,
                    "cannot open config: " + config_path);
      cfg = config_from_json(json::parse(in));
    }
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "bad_config"}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << json{{"error", error_code_name(e.code())},
                      {"message", e.what()}}
                     .dump()
              << "\n";
    return 1;
  }

  CLI::App app{"joint ASR + SER training and evaluation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // accept global flags after the subcommand too
  std::string config_flag;  // consumed in the prepass above
  app.add_option("--config", config_flag, "JSON config file");
  app.add_option("--seed", cfg.seed, "global seed")->envname("ASRSER_SEED");
  app.add_option("--out", cfg.out_dir, "run directory")->envname("ASRSER_OUT");

  auto* synth = app.add_subcommand("synth-corpus", "generate the toy corpus");
  synth->add_option("--speakers", cfg.speakers, "number of speakers");
  synth->add_option("--per-speaker", cfg.per_speaker, "utterances per speaker");

  auto* mix = app.add_subcommand(
      "mix", "build noise pools, the noisy training set and the 7 scenarios");
  mix->add_option("--noise-clips", cfg.noise_clips, "clips per noise category");

  auto* tr = app.add_subcommand("train", "train one fold or all folds");
  int fold = -1;
  bool all_folds = false;
  int jobs = 1;
  auto* fold_opt = tr->add_option("--fold", fold, "fold index (0-based)");
  auto* all_opt = tr->add_flag("--all-folds", all_folds,
                               "spawn one process per fold");
  fold_opt->excludes(all_opt);
  tr->add_option("--jobs", jobs, "max concurrent fold processes")
      ->envname("ASRSER_JOBS");
  tr->add_option("--arch", cfg.architecture,
                 "asr_baseline | ser_baseline | joint");
  tr->add_option("--trained-on", cfg.trained_on, "clean | noise");
  tr->add_option("--epochs", cfg.epochs, "training epochs");
  tr->add_option("--learning-rate", cfg.learning_rate, "Adam step size");
  tr->add_option("--alpha", cfg.alpha, "SER weight in the joint loss");
  tr->add_flag("--augment-speeds", cfg.augment_speeds,
               "95/100/105 speed perturbation");

  auto* ev = app.add_subcommand("evaluate", "score all folds on all scenarios");
  auto* gc = app.add_subcommand("gradcheck",
                                "finite-difference gradient verification");
  auto* rp = app.add_subcommand("report", "re-emit report artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(synth)) return cmd_synth_corpus(cfg);
    if (app.got_subcommand(mix)) return cmd_mix(cfg);
    if (app.got_subcommand(tr)) {
      if (!all_folds && fold < 0)
        throw Error(ErrorCode::BadConfig, "train needs --fold or --all-folds");
      if (jobs < 1)
        throw Error(ErrorCode::BadConfig, "--jobs must be >= 1");
      return cmd_train(cfg, fold, all_folds, jobs);
    }
    if (app.got_subcommand(ev)) return cmd_evaluate(cfg);
    if (app.got_subcommand(gc)) return cmd_gradcheck(cfg);
    if (app.got_subcommand(rp)) return cmd_report(cfg);
  } catch (const Error& e) {
    std::cerr << json{{"error", error_code_name(e.code())},
                      {"message", e.what()}}
                     .dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "unexpected"}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  }
  return 0;
}
