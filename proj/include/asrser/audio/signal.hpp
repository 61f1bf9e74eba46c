// Signal-level primitives: RMS, SNR-exact mixing, speed perturbation.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "asrser/audio/wav.hpp"

namespace asrser::audio {

enum class NoiseCategory { noise, music, speech };

std::string to_string(NoiseCategory c);
NoiseCategory noise_category_from_string(const std::string& s);

struct MixSpec {
  double snr_db = 0.0;
  NoiseCategory noise_category = NoiseCategory::noise;
  std::string noise_clip_id;
  size_t noise_offset_samples = 0;
  int64_t seed = 0;
};

// Root mean square over the full buffer.
double rms(const AudioBuffer& buf);

// clean + g * noise', with the noise tiled cyclically from the spec offset
// to clean's length and g chosen so the component SNR equals spec.snr_db
// exactly. If the mix peaks above 1, both components are rescaled jointly
// (never clipped) so the SNR is preserved.
AudioBuffer mix_at_snr(const AudioBuffer& clean, const AudioBuffer& noise,
                       const MixSpec& spec);

// Linear-interpolation resampling at factor_percent/100.
// Factor 100 returns an identical copy. Allowed factors: 95, 100, 105.
AudioBuffer speed_perturb(const AudioBuffer& buf, int factor_percent);

}  // namespace asrser::audio
