#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "asrser/audio/mel.hpp"
#include "asrser/audio/signal.hpp"
#include "asrser/audio/wav.hpp"
#include "asrser/common.hpp"
#include "doctest.h"

using namespace asrser;
using audio::AudioBuffer;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_raw_wav(const std::string& path, const std::vector<int16_t>& pcm,
                   uint16_t channels = 1) {
  AudioBuffer buf;
  buf.samples.assign(pcm.size(), 0.0);
  audio::save_wav(path, buf);  // produces a valid header
  // overwrite the data chunk with the exact int16 payload
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(22);
  f.write(reinterpret_cast<const char*>(&channels), 2);
  f.seekp(44);
  f.write(reinterpret_cast<const char*>(pcm.data()), pcm.size() * 2);
}

AudioBuffer random_buffer(size_t n, uint64_t seed, double amp = 0.5) {
  Rng rng(seed);
  AudioBuffer buf;
  buf.samples.resize(n);
  for (auto& s : buf.samples) s = rng.uniform(-amp, amp);
  return buf;
}

AudioBuffer sine(double freq, double seconds, int sr = 16000, double amp = 0.5) {
  AudioBuffer buf;
  buf.sample_rate_hz = sr;
  size_t n = static_cast<size_t>(seconds * sr);
  buf.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    buf.samples[i] = amp * std::sin(2.0 * 3.14159265358979323846 * freq * i / sr);
  return buf;
}

int zero_crossings(const AudioBuffer& buf) {
  int count = 0;
  for (size_t i = 1; i < buf.samples.size(); ++i)
    if ((buf.samples[i - 1] < 0) != (buf.samples[i] < 0)) ++count;
  return count;
}

}  // namespace

TEST_CASE("load_wav scales int16 by 1/32768") {
  std::string path = tmp_path("scale.wav");
  write_raw_wav(path, {0, 16384, -32768});
  AudioBuffer buf = audio::load_wav(path);
  REQUIRE(buf.samples.size() == 3);
  CHECK(buf.samples[0] == 0.0);
  CHECK(buf.samples[1] == 0.5);
  CHECK(buf.samples[2] == -1.0);
}

TEST_CASE("load_wav rejects empty data chunk") {
  std::string path = tmp_path("empty.wav");
  write_raw_wav(path, {});
  CHECK_THROWS_WITH_AS(audio::load_wav(path), doctest::Contains("empty audio"),
                       Error);
}

TEST_CASE("load_wav distinct errors") {
  CHECK_THROWS_AS(audio::load_wav(tmp_path("nope_missing.wav")), Error);
  try {
    audio::load_wav(tmp_path("nope_missing.wav"));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FileNotFound);
  }

  std::string stereo = tmp_path("stereo.wav");
  write_raw_wav(stereo, {1, 2, 3, 4}, /*channels=*/2);
  try {
    audio::load_wav(stereo);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotMono);
  }

  std::string garbage = tmp_path("garbage.wav");
  std::ofstream(garbage) << "not a wav at all";
  try {
    audio::load_wav(garbage);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedEncoding);
  }
}

TEST_CASE("wav round-trip within one LSB") {
  AudioBuffer buf = random_buffer(5000, 42, 0.99);
  std::string path = tmp_path("round.wav");
  audio::save_wav(path, buf);
  AudioBuffer back = audio::load_wav(path);
  REQUIRE(back.samples.size() == buf.samples.size());
  double max_err = 0.0;
  for (size_t i = 0; i < buf.samples.size(); ++i)
    max_err = std::max(max_err, std::fabs(buf.samples[i] - back.samples[i]));
  CHECK(max_err <= 1.0 / 32768.0);
}

TEST_CASE("rms basics") {
  AudioBuffer buf;
  buf.samples.assign(17, 0.5);
  CHECK(audio::rms(buf) == doctest::Approx(0.5).epsilon(1e-12));
  buf.samples.assign(8, 0.0);
  CHECK(audio::rms(buf) == 0.0);
  buf.samples = {1, -1, 1, -1};
  CHECK(audio::rms(buf) == doctest::Approx(1.0).epsilon(1e-12));
  buf.samples.clear();
  CHECK_THROWS_AS(audio::rms(buf), Error);
}

TEST_CASE("rms scales linearly") {
  AudioBuffer buf = random_buffer(1000, 7);
  double r = audio::rms(buf);
  for (double a : {-2.5, 0.25, 3.0}) {
    AudioBuffer scaled = buf;
    for (auto& s : scaled.samples) s *= a;
    CHECK(audio::rms(scaled) == doctest::Approx(std::fabs(a) * r).epsilon(1e-12));
  }
}

TEST_CASE("mix gain formula") {
  // rms(clean)=0.1, rms(noise)=0.2, snr 20 dB -> g = 0.05
  AudioBuffer clean, noise;
  clean.samples.assign(1000, 0.1);
  noise.samples.assign(1000, 0.2);
  audio::MixSpec spec;
  spec.snr_db = 20.0;
  AudioBuffer mixed = audio::mix_at_snr(clean, noise, spec);
  // mixed = 0.1 + 0.05*0.2 = 0.11 everywhere
  CHECK(mixed.samples[0] == doctest::Approx(0.11).epsilon(1e-12));
  CHECK(mixed.samples.size() == clean.samples.size());

  spec.snr_db = 0.0;  // equal energy -> g = 0.5 here (rms ratio 0.5)
  AudioBuffer mixed0 = audio::mix_at_snr(clean, clean, spec);
  CHECK(mixed0.samples[0] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("mix SNR exact for random buffers") {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(1000 + trial);
    AudioBuffer clean = random_buffer(4000 + rng.uniform_index(4000), rng.next_u64());
    AudioBuffer noise = random_buffer(1000 + rng.uniform_index(4000), rng.next_u64());
    audio::MixSpec spec;
    spec.snr_db = rng.uniform(-10.0, 40.0);
    spec.noise_offset_samples = rng.uniform_index(noise.samples.size());

    // reconstruct the components the same way and re-measure
    AudioBuffer mixed = audio::mix_at_snr(clean, noise, spec);
    std::vector<double> tiled(clean.samples.size());
    for (size_t i = 0; i < tiled.size(); ++i)
      tiled[i] =
          noise.samples[(spec.noise_offset_samples + i) % noise.samples.size()];
    AudioBuffer noise_comp{tiled, 16000};
    // noise component of the mix = mixed - scaled clean; infer joint scale
    // from the clean samples
    double scale = 1.0;
    {
      AudioBuffer unscaled = mixed;
      double g = (audio::rms(clean) / audio::rms(noise_comp)) *
                 std::pow(10.0, -spec.snr_db / 20.0);
      double peak = 0.0;
      for (size_t i = 0; i < clean.samples.size(); ++i)
        peak = std::max(peak,
                        std::fabs(clean.samples[i] + g * noise_comp.samples[i]));
      if (peak > 1.0) scale = 1.0 / peak;
      AudioBuffer c = clean, n = noise_comp;
      for (auto& s : c.samples) s *= scale;
      for (size_t i = 0; i < n.samples.size(); ++i) n.samples[i] *= scale * g;
      double measured = 20.0 * std::log10(audio::rms(c) / audio::rms(n));
      CHECK(std::fabs(measured - spec.snr_db) <= 1e-4);
      // and components sum to the mix
      for (size_t i = 0; i < 10; ++i)
        CHECK(std::fabs(c.samples[i] + n.samples[i] - mixed.samples[i]) <= 1e-12);
    }
  }
}

TEST_CASE("mix determinism and errors") {
  AudioBuffer clean = random_buffer(3000, 5);
  AudioBuffer noise = random_buffer(1000, 6);
  audio::MixSpec spec;
  spec.snr_db = 12.0;
  spec.noise_offset_samples = 123;
  AudioBuffer a = audio::mix_at_snr(clean, noise, spec);
  AudioBuffer b = audio::mix_at_snr(clean, noise, spec);
  CHECK(a.samples == b.samples);

  AudioBuffer silent;
  silent.samples.assign(100, 0.0);
  CHECK_THROWS_AS(audio::mix_at_snr(silent, noise, spec), Error);
  AudioBuffer wrong_rate = noise;
  wrong_rate.sample_rate_hz = 8000;
  CHECK_THROWS_AS(audio::mix_at_snr(clean, wrong_rate, spec), Error);
}

TEST_CASE("speed_perturb lengths and identity") {
  AudioBuffer buf = random_buffer(16000, 9);
  AudioBuffer same = audio::speed_perturb(buf, 100);
  CHECK(same.samples == buf.samples);

  AudioBuffer slow = audio::speed_perturb(buf, 95);
  CHECK(std::llabs(static_cast<long long>(slow.samples.size()) - 16842) <= 1);

  CHECK_THROWS_AS(audio::speed_perturb(buf, 97), Error);
}

TEST_CASE("speed_perturb shifts a sine's frequency") {
  AudioBuffer tone = sine(100.0, 1.0);
  AudioBuffer fast = audio::speed_perturb(tone, 105);
  // each full period gives 2 zero crossings
  double seconds = static_cast<double>(fast.samples.size()) / 16000.0;
  double freq = zero_crossings(fast) / (2.0 * seconds);
  CHECK(std::fabs(freq - 105.0) <= 1.0);
}

TEST_CASE("speed_perturb round trip restores length approximately") {
  AudioBuffer buf = random_buffer(16000, 11);
  AudioBuffer slow = audio::speed_perturb(buf, 95);
  AudioBuffer back = audio::speed_perturb(slow, 105);
  // 95 then 105 is not an exact inverse; length must come back within a
  // fraction of a percent
  CHECK(std::fabs(static_cast<double>(back.samples.size()) - 16000.0 * 100.0 / 95.0 * 100.0 / 105.0) <= 2.0);
}

TEST_CASE("log_mel frame count") {
  AudioBuffer buf = random_buffer(16000, 13);
  audio::MelConfig cfg;
  audio::FeatureMatrix feats = audio::log_mel(buf, cfg);
  CHECK(feats.rows() == 98);  // floor((16000-400)/160)+1
  CHECK(feats.cols() == 80);
  CHECK(feats.allFinite());
}

TEST_CASE("log_mel silence floor") {
  AudioBuffer buf;
  buf.samples.assign(1600, 0.0);
  audio::MelConfig cfg;
  audio::FeatureMatrix feats = audio::log_mel(buf, cfg);
  for (Eigen::Index t = 0; t < feats.rows(); ++t)
    for (Eigen::Index m = 0; m < feats.cols(); ++m)
      CHECK(feats(t, m) == doctest::Approx(std::log(cfg.log_floor)).epsilon(1e-12));
}

TEST_CASE("log_mel log-linearity under amplitude doubling") {
  AudioBuffer buf = sine(440.0, 0.5, 16000, 0.25);
  audio::MelConfig cfg;
  audio::FeatureMatrix a = audio::log_mel(buf, cfg);
  for (auto& s : buf.samples) s *= 2.0;
  audio::FeatureMatrix b = audio::log_mel(buf, cfg);
  double ln4 = std::log(4.0);
  for (Eigen::Index t = 0; t < a.rows(); ++t) {
    for (Eigen::Index m = 0; m < a.cols(); ++m) {
      bool floored_a = a(t, m) <= std::log(cfg.log_floor) + 1e-12;
      bool floored_b = b(t, m) <= std::log(cfg.log_floor) + ln4 + 1e-9;
      if (!floored_a && !floored_b)
        CHECK(std::fabs(b(t, m) - a(t, m) - ln4) <= 1e-9);
    }
  }
}

TEST_CASE("log_mel buffer too short") {
  AudioBuffer buf;
  buf.samples.assign(100, 0.1);
  CHECK_THROWS_AS(audio::log_mel(buf, audio::MelConfig{}), Error);
}

TEST_CASE("log_mel finite on harsh inputs") {
  AudioBuffer buf = random_buffer(8000, 17, 1.0);
  for (size_t i = 0; i < buf.samples.size(); i += 37) buf.samples[i] = 0.0;
  audio::MelConfig cfg;
  cfg.n_mels = 24;
  CHECK(audio::log_mel(buf, cfg).allFinite());
}
