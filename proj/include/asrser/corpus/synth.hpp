// Deterministic synthetic corpus and noise-pool generation.
//
// Each character maps to a fixed pure tone, each emotion class to a global
// background tone plus an amplitude-modulation pattern, and the speaker
// identity shifts the tone base frequency. The mapping is simple enough for
// the desk-scale model to learn from a handful of utterances.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asrser/audio/wav.hpp"
#include "asrser/corpus/manifest.hpp"

namespace asrser::corpus {

struct SynthResult {
  std::vector<UtteranceRecord> records;
  std::string manifest_path;
};

// Renders a transcript as a tone sequence for the given speaker/emotion.
audio::AudioBuffer render_utterance(const std::string& transcript,
                                    int speaker_index, Emotion emotion,
                                    int sample_rate_hz = 16000);

// Writes n_speakers * n_per_speaker WAV files plus manifest.jsonl to out_dir.
SynthResult synth_toy_corpus(int n_speakers, int n_per_speaker, uint64_t seed,
                             const std::string& out_dir);

// Writes clips_per_category WAVs into out_dir/{noise,music,speech}/.
void synth_noise_pool(const std::string& out_dir, uint64_t seed,
                      int clips_per_category = 3, double clip_s = 3.0,
                      int sample_rate_hz = 16000);

}  // namespace asrser::corpus
