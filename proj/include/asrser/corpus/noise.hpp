// Noise-pool handling, training-set corruption and the seven test scenarios.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "asrser/audio/signal.hpp"
#include "asrser/corpus/manifest.hpp"

namespace asrser::corpus {

// Directory layout: pool_dir/{noise,music,speech}/*.wav.
// Clips are cached after first load; clip ids are paths relative to the pool
// root, sorted, so spec assignment is independent of directory enumeration
// order.
class NoisePool {
 public:
  explicit NoisePool(const std::string& pool_dir);

  const std::vector<std::string>& clip_ids(audio::NoiseCategory cat) const;
  const audio::AudioBuffer& clip(const std::string& clip_id) const;

 private:
  std::string root_;
  std::map<audio::NoiseCategory, std::vector<std::string>> ids_;
  mutable std::map<std::string, audio::AudioBuffer> cache_;
};

struct MixProvenance {
  std::string id;         // utterance id
  std::string clean_wav;  // source audio
  audio::MixSpec spec;
};

struct CorruptResult {
  std::vector<UtteranceRecord> records;
  std::vector<MixProvenance> provenance;
};

// Draws the MixSpec for one utterance of the noisy training set: category
// uniform over the three, SNR uniform over integers [5, 35], clip and offset
// uniform, all from a stable per-utterance seed.
audio::MixSpec assign_training_mix(const std::string& utterance_id,
                                   const NoisePool& pool, uint64_t seed);

// Overlays every utterance exactly once and writes the result to out_dir
// together with manifest.jsonl and provenance.jsonl.
CorruptResult corrupt_training_set(const std::vector<UtteranceRecord>& records,
                                   const NoisePool& pool, uint64_t seed,
                                   const std::string& out_dir);

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "clean",       "noise_snr15", "noise_snr5", "music_snr15",
      "music_snr5",  "speech_snr15", "speech_snr5"};
  return names;
}

struct ScenarioSet {
  std::string name;
  std::vector<UtteranceRecord> records;
  std::vector<MixProvenance> provenance;  // empty for the clean scenario
};

// Builds the seven test scenarios under out_dir/<name>/ (clean copied
// byte-identically, the six noisy ones mixed at exactly 15 or 5 dB).
std::vector<ScenarioSet> build_test_scenarios(
    const std::vector<UtteranceRecord>& records, const NoisePool& pool,
    uint64_t seed, const std::string& out_dir);

void save_provenance(const std::string& path,
                     const std::vector<MixProvenance>& provenance);
std::vector<MixProvenance> load_provenance(const std::string& path);

}  // namespace asrser::corpus
