#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "asrser/audio/signal.hpp"
#include "asrser/audio/wav.hpp"
#include "asrser/common.hpp"
#include "asrser/corpus/folds.hpp"
#include "asrser/corpus/manifest.hpp"
#include "asrser/corpus/noise.hpp"
#include "asrser/corpus/synth.hpp"
#include "doctest.h"

using namespace asrser;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("manifest round trip") {
  std::string dir = fresh_dir("asrser_manifest");
  std::vector<corpus::UtteranceRecord> records = {
      {"u1", "a.wav", "spk0", "sess0", "fox dig", corpus::Emotion::happy, 1.25},
      {"u2", "b.wav", "spk1", "sess0", "moss", corpus::Emotion::angry, 0.5},
  };
  std::string path = dir + "/manifest.jsonl";
  corpus::save_manifest(path, records);
  auto back = corpus::load_manifest(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "u1");
  CHECK(back[0].transcript == "fox dig");
  CHECK(back[0].emotion == corpus::Emotion::happy);
  CHECK(back[0].duration_s == doctest::Approx(1.25));
  CHECK(back[1].speaker == "spk1");
}

TEST_CASE("manifest rejects bad lines with line numbers") {
  std::string dir = fresh_dir("asrser_manifest_bad");
  std::string path = dir + "/m.jsonl";
  {
    std::ofstream f(path);
    f << R"({"id":"u1","wav":"a.wav","speaker":"s0","session":"x","transcript":"fox","emotion":"happy","duration_s":1.0})"
      << "\n";
    f << "this is not json\n";
  }
  try {
    corpus::load_manifest(path);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadManifestLine);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("manifest rejects duplicates and unknown emotions") {
  std::string dir = fresh_dir("asrser_manifest_dup");
  std::string path = dir + "/m.jsonl";
  std::string rec =
      R"({"id":"u1","wav":"a.wav","speaker":"s0","session":"x","transcript":"fox","emotion":"happy","duration_s":1.0})";
  {
    std::ofstream f(path);
    f << rec << "\n" << rec << "\n";
  }
  try {
    corpus::load_manifest(path);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateId);
  }
  {
    std::ofstream f(path);
    f << R"({"id":"u1","wav":"a.wav","speaker":"s0","session":"x","transcript":"fox","emotion":"giddy","duration_s":1.0})"
      << "\n";
  }
  try {
    corpus::load_manifest(path);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownEmotion);
  }
}

TEST_CASE("loso folds partition the corpus") {
  std::vector<corpus::UtteranceRecord> records;
  for (int s = 0; s < 4; ++s)
    for (int u = 0; u < 3; ++u) {
      corpus::UtteranceRecord r;
      r.id = "spk" + std::to_string(s) + "_u" + std::to_string(u);
      r.speaker = "spk" + std::to_string(s);
      records.push_back(r);
    }
  auto plan = corpus::make_loso_folds(records);
  REQUIRE(plan.folds.size() == 4);
  for (size_t k = 0; k < plan.folds.size(); ++k) {
    const auto& f = plan.folds[k];
    CHECK(f.test_speaker == "spk" + std::to_string(k));
    CHECK(f.test_ids.size() == 3);
    CHECK(f.train_ids.size() == 9);
    std::set<std::string> train(f.train_ids.begin(), f.train_ids.end());
    for (const auto& id : f.test_ids) {
      CHECK(train.count(id) == 0);
      CHECK(id.rfind(f.test_speaker + "_", 0) == 0);
    }
    CHECK(train.size() + f.test_ids.size() == records.size());
  }
}

TEST_CASE("loso folds need at least two speakers") {
  std::vector<corpus::UtteranceRecord> records(2);
  records[0].id = "a";
  records[0].speaker = "only";
  records[1].id = "b";
  records[1].speaker = "only";
  CHECK_THROWS_AS(corpus::make_loso_folds(records), Error);
}

TEST_CASE("synth corpus is deterministic and well formed") {
  std::string dir_a = fresh_dir("asrser_synth_a");
  std::string dir_b = fresh_dir("asrser_synth_b");
  auto res_a = corpus::synth_toy_corpus(3, 4, 42, dir_a);
  auto res_b = corpus::synth_toy_corpus(3, 4, 42, dir_b);
  REQUIRE(res_a.records.size() == 12);

  std::set<std::string> speakers, ids;
  for (const auto& r : res_a.records) {
    speakers.insert(r.speaker);
    CHECK(ids.insert(r.id).second);
    CHECK(fs::exists(fs::path(dir_a) / r.wav));
    CHECK(r.duration_s > 0.0);
    // transcript uses only lexicon characters
    for (char c : r.transcript) CHECK(((c >= 'a' && c <= 'z') || c == ' '));
  }
  CHECK(speakers.size() == 3);

  // reloadable manifest
  auto loaded = corpus::load_manifest(res_a.manifest_path);
  CHECK(loaded.size() == res_a.records.size());

  // byte-identical across reruns with the same seed
  for (const auto& r : res_a.records) {
    CHECK(read_bytes((fs::path(dir_a) / r.wav).string()) ==
          read_bytes((fs::path(dir_b) / r.wav).string()));
  }
  CHECK(read_bytes(res_a.manifest_path) == read_bytes(res_b.manifest_path));

  // a different seed changes the content
  std::string dir_c = fresh_dir("asrser_synth_c");
  auto res_c = corpus::synth_toy_corpus(3, 4, 43, dir_c);
  bool any_diff = false;
  for (size_t i = 0; i < res_a.records.size(); ++i)
    if (res_a.records[i].transcript != res_c.records[i].transcript)
      any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("all four emotions appear per speaker") {
  std::string dir = fresh_dir("asrser_synth_emo");
  auto res = corpus::synth_toy_corpus(2, 8, 1, dir);
  std::map<std::string, std::set<corpus::Emotion>> by_speaker;
  for (const auto& r : res.records) by_speaker[r.speaker].insert(r.emotion);
  for (const auto& [spk, emos] : by_speaker) CHECK(emos.size() == 4);
}

TEST_CASE("noise pool layout and ordering") {
  std::string dir = fresh_dir("asrser_pool");
  corpus::synth_noise_pool(dir, 7, 3, 1.0);
  corpus::NoisePool pool(dir);
  for (auto cat : {audio::NoiseCategory::noise, audio::NoiseCategory::music,
                   audio::NoiseCategory::speech}) {
    const auto& ids = pool.clip_ids(cat);
    REQUIRE(ids.size() == 3);
    CHECK(std::is_sorted(ids.begin(), ids.end()));
    for (const auto& id : ids) {
      CHECK(id.rfind(audio::to_string(cat) + "/", 0) == 0);
      CHECK(pool.clip(id).samples.size() == 16000);
    }
  }
}

TEST_CASE("noise pool rejects an empty category") {
  std::string dir = fresh_dir("asrser_pool_empty");
  corpus::synth_noise_pool(dir, 7, 2, 1.0);
  fs::remove_all(fs::path(dir) / "music");
  fs::create_directories(fs::path(dir) / "music");
  CHECK_THROWS_AS(corpus::NoisePool{dir}, Error);
}

TEST_CASE("training mix assignment is per-utterance stable") {
  std::string dir = fresh_dir("asrser_pool_mix");
  corpus::synth_noise_pool(dir, 7, 3, 1.0);
  corpus::NoisePool pool(dir);

  auto a = corpus::assign_training_mix("spk0_utt0", pool, 99);
  auto b = corpus::assign_training_mix("spk0_utt0", pool, 99);
  CHECK(a.snr_db == b.snr_db);
  CHECK(a.noise_clip_id == b.noise_clip_id);
  CHECK(a.noise_offset_samples == b.noise_offset_samples);
  CHECK(a.noise_category == b.noise_category);

  // integer SNR in [5, 35]
  for (int i = 0; i < 200; ++i) {
    auto spec = corpus::assign_training_mix("utt" + std::to_string(i), pool, 3);
    CHECK(spec.snr_db >= 5.0);
    CHECK(spec.snr_db <= 35.0);
    CHECK(spec.snr_db == std::floor(spec.snr_db));
    CHECK(spec.noise_offset_samples <
          pool.clip(spec.noise_clip_id).samples.size());
  }

  // different seed changes at least some assignments
  int diffs = 0;
  for (int i = 0; i < 50; ++i) {
    auto s1 = corpus::assign_training_mix("utt" + std::to_string(i), pool, 3);
    auto s2 = corpus::assign_training_mix("utt" + std::to_string(i), pool, 4);
    if (s1.snr_db != s2.snr_db || s1.noise_clip_id != s2.noise_clip_id) ++diffs;
  }
  CHECK(diffs > 0);
}

TEST_CASE("corrupt_training_set covers every utterance once") {
  std::string corpus_dir = fresh_dir("asrser_corrupt_src");
  std::string pool_dir = fresh_dir("asrser_corrupt_pool");
  std::string out_dir = fresh_dir("asrser_corrupt_out");
  auto synth = corpus::synth_toy_corpus(2, 3, 11, corpus_dir);
  corpus::synth_noise_pool(pool_dir, 12, 2, 1.5);
  corpus::NoisePool pool(pool_dir);

  // make wav paths absolute so corruption can read them
  auto records = synth.records;
  for (auto& r : records)
    r.wav = (fs::path(corpus_dir) / r.wav).string();

  auto result = corpus::corrupt_training_set(records, pool, 5, out_dir);
  REQUIRE(result.records.size() == records.size());
  REQUIRE(result.provenance.size() == records.size());
  std::set<std::string> seen;
  for (const auto& p : result.provenance) CHECK(seen.insert(p.id).second);
  for (const auto& r : result.records)
    CHECK(fs::exists(fs::path(out_dir) / r.wav));
  CHECK(fs::exists(fs::path(out_dir) / "manifest.jsonl"));
  CHECK(fs::exists(fs::path(out_dir) / "provenance.jsonl"));

  // provenance + pool reproduce each mixed file exactly
  for (const auto& p : result.provenance) {
    audio::AudioBuffer clean = audio::load_wav(p.clean_wav);
    const audio::AudioBuffer& noise = pool.clip(p.spec.noise_clip_id);
    audio::AudioBuffer remixed = audio::mix_at_snr(clean, noise, p.spec);
    // written file passed through int16, so compare after quantization
    std::string wav_path;
    for (const auto& r : result.records)
      if (r.id == p.id) wav_path = (fs::path(out_dir) / r.wav).string();
    audio::AudioBuffer reloaded = audio::load_wav(wav_path);
    REQUIRE(reloaded.samples.size() == remixed.samples.size());
    double max_err = 0.0;
    for (size_t i = 0; i < remixed.samples.size(); ++i)
      max_err = std::max(max_err,
                         std::fabs(remixed.samples[i] - reloaded.samples[i]));
    CHECK(max_err <= 1.0 / 32768.0);
  }
}

TEST_CASE("provenance round trip") {
  std::string dir = fresh_dir("asrser_prov");
  std::vector<corpus::MixProvenance> prov(2);
  prov[0].id = "u1";
  prov[0].clean_wav = "/tmp/u1.wav";
  prov[0].spec.snr_db = 15.0;
  prov[0].spec.noise_category = audio::NoiseCategory::music;
  prov[0].spec.noise_clip_id = "music/clip0.wav";
  prov[0].spec.noise_offset_samples = 777;
  prov[0].spec.seed = 31;
  prov[1].id = "u2";
  prov[1].clean_wav = "/tmp/u2.wav";
  prov[1].spec.snr_db = 5.0;
  prov[1].spec.noise_category = audio::NoiseCategory::speech;
  prov[1].spec.noise_clip_id = "speech/clip1.wav";

  std::string path = dir + "/prov.jsonl";
  corpus::save_provenance(path, prov);
  auto back = corpus::load_provenance(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "u1");
  CHECK(back[0].spec.snr_db == 15.0);
  CHECK(back[0].spec.noise_category == audio::NoiseCategory::music);
  CHECK(back[0].spec.noise_clip_id == "music/clip0.wav");
  CHECK(back[0].spec.noise_offset_samples == 777);
  CHECK(back[1].spec.snr_db == 5.0);
}

TEST_CASE("seven test scenarios, clean copied byte-identically") {
  std::string corpus_dir = fresh_dir("asrser_scn_src");
  std::string pool_dir = fresh_dir("asrser_scn_pool");
  std::string out_dir = fresh_dir("asrser_scn_out");
  auto synth = corpus::synth_toy_corpus(2, 2, 21, corpus_dir);
  corpus::synth_noise_pool(pool_dir, 22, 2, 1.5);
  corpus::NoisePool pool(pool_dir);

  auto records = synth.records;
  for (auto& r : records) r.wav = (fs::path(corpus_dir) / r.wav).string();

  auto scenarios = corpus::build_test_scenarios(records, pool, 6, out_dir);
  REQUIRE(scenarios.size() == 7);
  for (size_t i = 0; i < scenarios.size(); ++i)
    CHECK(scenarios[i].name == corpus::scenario_names()[i]);

  for (const auto& s : scenarios) {
    CHECK(s.records.size() == records.size());
    CHECK(fs::exists(fs::path(out_dir) / s.name / "manifest.jsonl"));
    if (s.name == "clean") {
      CHECK(s.provenance.empty());
      for (size_t i = 0; i < records.size(); ++i) {
        std::string copied =
            (fs::path(out_dir) / s.name / s.records[i].wav).string();
        CHECK(read_bytes(copied) == read_bytes(records[i].wav));
      }
    } else {
      CHECK(s.provenance.size() == records.size());
      double want_snr = s.name.find("snr15") != std::string::npos ? 15.0 : 5.0;
      std::string want_cat = s.name.substr(0, s.name.find('_'));
      for (const auto& p : s.provenance) {
        CHECK(p.spec.snr_db == want_snr);
        CHECK(audio::to_string(p.spec.noise_category) == want_cat);
      }
    }
  }

  // deterministic across reruns
  std::string out_dir2 = fresh_dir("asrser_scn_out2");
  auto scenarios2 = corpus::build_test_scenarios(records, pool, 6, out_dir2);
  for (size_t i = 0; i < scenarios.size(); ++i) {
    for (size_t j = 0; j < scenarios[i].records.size(); ++j) {
      std::string a =
          (fs::path(out_dir) / scenarios[i].name / scenarios[i].records[j].wav)
              .string();
      std::string b = (fs::path(out_dir2) / scenarios2[i].name /
                       scenarios2[i].records[j].wav)
                          .string();
      CHECK(read_bytes(a) == read_bytes(b));
    }
  }
}
