// RIFF/WAVE PCM16 mono I/O.
#pragma once

#include <string>
#include <vector>

namespace asrser::audio {

struct AudioBuffer {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  int sample_rate_hz = 16000;

  size_t size() const { return samples.size(); }
};

// Loads a mono 16-bit PCM WAV. Samples are scaled by 1/32768.
AudioBuffer load_wav(const std::string& path);

// Writes a mono 16-bit PCM WAV. Samples are clamped to [-1, 1] and
// quantized by round(x * 32767).
void save_wav(const std::string& path, const AudioBuffer& buf);

}  // namespace asrser::audio
