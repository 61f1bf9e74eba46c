// Shared error type, deterministic RNG and small hashing utilities.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace asrser {

enum class ErrorCode {
  FileNotFound,
  NotMono,
  UnsupportedEncoding,
  EmptyAudio,
  EmptyBuffer,
  ZeroEnergy,
  SampleRateMismatch,
  BadSpeedFactor,
  BufferTooShort,
  BadManifestLine,
  DuplicateId,
  UnknownEmotion,
  SingleSpeaker,
  EmptyNoiseCategory,
  InfeasibleTarget,
  BadVocabChar,
  MissingReference,
  NonFiniteLoss,
  EmptyReference,
  LengthMismatch,
  BadConfig,
  LeakageDetected,
  IncompleteReport,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// splitmix64, used both as a stable hash mixer and as the RNG core.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic RNG with a fixed algorithm (std:: distributions are
// implementation-defined, which would break byte-identical reruns).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // decorrelate nearby seeds
    for (int i = 0; i < 4; ++i) splitmix64(state_);
  }

  uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, n)
  uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

  // uniform integer in [lo, hi] inclusive
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(uniform_index(static_cast<uint64_t>(hi - lo + 1)));
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  uint64_t state_;
};

// FNV-1a over bytes; stable across platforms.
inline uint64_t fnv1a(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stable per-item seed derived from a run seed and a string id.
inline uint64_t derive_seed(uint64_t seed, std::string_view id) {
  uint64_t h = fnv1a(id);
  uint64_t s = seed ^ 0x5851f42d4c957f2dULL;
  h ^= splitmix64(s);
  return h;
}

}  // namespace asrser
