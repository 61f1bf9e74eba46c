#include "asrser/audio/signal.hpp"

#include <cmath>

#include "asrser/common.hpp"

namespace asrser::audio {

std::string to_string(NoiseCategory c) {
  switch (c) {
    case NoiseCategory::noise: return "noise";
    case NoiseCategory::music: return "music";
    case NoiseCategory::speech: return "speech";
  }
  return "noise";
}

NoiseCategory noise_category_from_string(const std::string& s) {
  if (s == "noise") return NoiseCategory::noise;
  if (s == "music") return NoiseCategory::music;
  if (s == "speech") return NoiseCategory::speech;
  throw Error(ErrorCode::BadConfig, "unknown noise category: " + s);
}

double rms(const AudioBuffer& buf) {
  if (buf.samples.empty()) throw Error(ErrorCode::EmptyBuffer, "rms of empty buffer");
  double acc = 0.0;
  for (double s : buf.samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(buf.samples.size()));
}

AudioBuffer mix_at_snr(const AudioBuffer& clean, const AudioBuffer& noise,
                       const MixSpec& spec) {
  if (clean.sample_rate_hz != noise.sample_rate_hz)
    throw Error(ErrorCode::SampleRateMismatch, "mix_at_snr: sample rate mismatch");
  if (clean.samples.empty() || noise.samples.empty())
    throw Error(ErrorCode::EmptyBuffer, "mix_at_snr: empty buffer");
  if (spec.noise_offset_samples >= noise.samples.size())
    throw Error(ErrorCode::BadConfig, "mix_at_snr: offset past noise clip end");

  const size_t n = clean.samples.size();
  const size_t m = noise.samples.size();

  // Tile the noise cyclically from the offset to the clean length.
  std::vector<double> tiled(n);
  for (size_t i = 0; i < n; ++i)
    tiled[i] = noise.samples[(spec.noise_offset_samples + i) % m];

  double rc = rms(clean);
  AudioBuffer tiled_buf{tiled, clean.sample_rate_hz};
  double rn = rms(tiled_buf);
  if (rc <= 0.0 || rn <= 0.0)
    throw Error(ErrorCode::ZeroEnergy, "mix_at_snr: zero-energy component");

  double gain = (rc / rn) * std::pow(10.0, -spec.snr_db / 20.0);

  AudioBuffer out;
  out.sample_rate_hz = clean.sample_rate_hz;
  out.samples.resize(n);
  double peak = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out.samples[i] = clean.samples[i] + gain * tiled[i];
    peak = std::max(peak, std::fabs(out.samples[i]));
  }
  if (peak > 1.0) {
    double scale = 1.0 / peak;  // joint rescale keeps the component SNR
    for (double& s : out.samples) s *= scale;
  }
  return out;
}

AudioBuffer speed_perturb(const AudioBuffer& buf, int factor_percent) {
  if (factor_percent != 95 && factor_percent != 100 && factor_percent != 105)
    throw Error(ErrorCode::BadSpeedFactor,
                "speed factor must be 95, 100 or 105, got " +
                    std::to_string(factor_percent));
  if (buf.samples.empty())
    throw Error(ErrorCode::EmptyBuffer, "speed_perturb: empty buffer");
  if (factor_percent == 100) return buf;

  const size_t n = buf.samples.size();
  const double step = static_cast<double>(factor_percent) / 100.0;
  const size_t out_n =
      static_cast<size_t>(std::floor(static_cast<double>(n - 1) / step)) + 1;

  AudioBuffer out;
  out.sample_rate_hz = buf.sample_rate_hz;
  out.samples.resize(out_n);
  for (size_t i = 0; i < out_n; ++i) {
    double pos = static_cast<double>(i) * step;
    size_t lo = static_cast<size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    size_t hi = std::min(lo + 1, n - 1);
    out.samples[i] = (1.0 - frac) * buf.samples[lo] + frac * buf.samples[hi];
  }
  return out;
}

}  // namespace asrser::audio
