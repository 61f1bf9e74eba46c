#include "asrser/corpus/synth.hpp"

#include <cmath>
#include <filesystem>

#include "asrser/common.hpp"

namespace asrser::corpus {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Per-character tone frequencies, well separated within the mel band.
double char_freq(char c, int speaker_index) {
  int idx;
  if (c >= 'a' && c <= 'z')
    idx = c - 'a';
  else if (c == '\'')
    idx = 26;
  else
    throw Error(ErrorCode::BadVocabChar,
                std::string("unrenderable character: ") + c);
  return 300.0 + 90.0 * idx + 6.0 * speaker_index;
}

// Background tone frequency and AM rate per emotion class.
double emotion_tone_hz(Emotion e) {
  switch (e) {
    case Emotion::neutral: return 3000.0;
    case Emotion::happy: return 3500.0;
    case Emotion::sad: return 4000.0;
    case Emotion::angry: return 4500.0;
  }
  return 3000.0;
}

double emotion_am_hz(Emotion e) {
  switch (e) {
    case Emotion::neutral: return 2.0;
    case Emotion::happy: return 4.0;
    case Emotion::sad: return 7.0;
    case Emotion::angry: return 11.0;
  }
  return 2.0;
}

const std::vector<std::string>& lexicon() {
  static const std::vector<std::string> words = {"abe", "dig", "fox",
                                                 "hum", "kit", "moss"};
  return words;
}

void append_tone(std::vector<double>& out, double freq, double amp,
                 int n_samples, int sample_rate) {
  // 5 ms raised-cosine edges to avoid clicks
  int ramp = sample_rate / 200;
  for (int i = 0; i < n_samples; ++i) {
    double env = 1.0;
    if (i < ramp) env = 0.5 - 0.5 * std::cos(kPi * i / ramp);
    if (n_samples - 1 - i < ramp)
      env = std::min(env, 0.5 - 0.5 * std::cos(kPi * (n_samples - 1 - i) / ramp));
    out.push_back(amp * env *
                  std::sin(2.0 * kPi * freq * i / sample_rate));
  }
}

void append_silence(std::vector<double>& out, int n_samples) {
  out.insert(out.end(), n_samples, 0.0);
}

}  // namespace

audio::AudioBuffer render_utterance(const std::string& transcript,
                                    int speaker_index, Emotion emotion,
                                    int sample_rate_hz) {
  const int char_len = sample_rate_hz * 90 / 1000;   // 90 ms tone
  const int gap_len = sample_rate_hz * 15 / 1000;    // 15 ms gap
  const int space_len = sample_rate_hz * 100 / 1000; // 100 ms silence
  const int edge_len = sample_rate_hz * 50 / 1000;

  std::vector<double> sig;
  append_silence(sig, edge_len);
  for (char c : transcript) {
    if (c == ' ') {
      append_silence(sig, space_len);
    } else {
      append_tone(sig, char_freq(c, speaker_index), 0.30, char_len,
                  sample_rate_hz);
      append_silence(sig, gap_len);
    }
  }
  append_silence(sig, edge_len);

  // Emotion cues: a constant background tone plus amplitude modulation.
  const double bg_hz = emotion_tone_hz(emotion);
  const double am_hz = emotion_am_hz(emotion);
  for (size_t i = 0; i < sig.size(); ++i) {
    double t = static_cast<double>(i) / sample_rate_hz;
    double am = 1.0 - 0.3 * (0.5 + 0.5 * std::sin(2.0 * kPi * am_hz * t));
    sig[i] = sig[i] * am + 0.08 * std::sin(2.0 * kPi * bg_hz * t);
  }
  return audio::AudioBuffer{std::move(sig), sample_rate_hz};
}

SynthResult synth_toy_corpus(int n_speakers, int n_per_speaker, uint64_t seed,
                             const std::string& out_dir) {
  if (n_speakers < 2)
    throw Error(ErrorCode::SingleSpeaker, "synth_toy_corpus needs >= 2 speakers");
  fs::create_directories(out_dir);

  SynthResult result;
  for (int s = 0; s < n_speakers; ++s) {
    for (int u = 0; u < n_per_speaker; ++u) {
      UtteranceRecord r;
      r.id = "spk" + std::to_string(s) + "_utt" + std::to_string(u);
      r.speaker = "spk" + std::to_string(s);
      r.session = "s1";
      r.emotion = static_cast<Emotion>(u % kNumEmotions);

      Rng rng(derive_seed(seed, r.id));
      const auto& words = lexicon();
      size_t w1 = rng.uniform_index(words.size());
      size_t w2 = rng.uniform_index(words.size() - 1);
      if (w2 >= w1) ++w2;  // two distinct words
      r.transcript = words[w1] + " " + words[w2];

      audio::AudioBuffer buf = render_utterance(r.transcript, s, r.emotion);
      r.duration_s = static_cast<double>(buf.size()) / buf.sample_rate_hz;
      r.wav = r.id + ".wav";  // relative to out_dir, keeps the manifest portable
      audio::save_wav((fs::path(out_dir) / r.wav).string(), buf);
      result.records.push_back(std::move(r));
    }
  }
  result.manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  save_manifest(result.manifest_path, result.records);
  return result;
}

void synth_noise_pool(const std::string& out_dir, uint64_t seed,
                      int clips_per_category, double clip_s,
                      int sample_rate_hz) {
  const int n = static_cast<int>(clip_s * sample_rate_hz);
  const std::vector<std::string> cats = {"noise", "music", "speech"};
  for (const auto& cat : cats) {
    fs::create_directories(fs::path(out_dir) / cat);
    for (int c = 0; c < clips_per_category; ++c) {
      Rng rng(derive_seed(seed, cat + "/" + std::to_string(c)));
      std::vector<double> sig(n, 0.0);
      if (cat == "noise") {
        for (int i = 0; i < n; ++i) sig[i] = 0.15 * rng.normal();
      } else if (cat == "music") {
        // chord sequence: 3 harmonics, note changes every 0.5 s
        double root = 220.0 * std::pow(2.0, rng.uniform_index(12) / 12.0);
        int note_len = sample_rate_hz / 2;
        for (int i = 0; i < n; ++i) {
          if (i % note_len == 0)
            root = 220.0 * std::pow(2.0, rng.uniform_index(12) / 12.0);
          double t = static_cast<double>(i) / sample_rate_hz;
          sig[i] = 0.12 * (std::sin(2 * kPi * root * t) +
                           0.5 * std::sin(2 * kPi * root * 1.5 * t) +
                           0.33 * std::sin(2 * kPi * root * 2.0 * t));
        }
      } else {
        // babble: three overlapping random tone sequences in the speech band
        for (int voice = 0; voice < 3; ++voice) {
          int seg_len = sample_rate_hz * 120 / 1000;
          double freq = 0.0;
          for (int i = 0; i < n; ++i) {
            if (i % seg_len == 0) freq = rng.uniform(250.0, 2600.0);
            double t = static_cast<double>(i) / sample_rate_hz;
            sig[i] += 0.08 * std::sin(2 * kPi * freq * t);
          }
        }
      }
      std::string path =
          (fs::path(out_dir) / cat / ("clip_" + std::to_string(c) + ".wav"))
              .string();
      audio::save_wav(path, audio::AudioBuffer{std::move(sig), sample_rate_hz});
    }
  }
}

}  // namespace asrser::corpus
