// Log-mel filterbank front end.
#pragma once

#include <Eigen/Dense>

#include "asrser/audio/wav.hpp"

namespace asrser::audio {

// time x dimension, row per frame
using FeatureMatrix = Eigen::MatrixXd;

struct MelConfig {
  int n_mels = 80;
  double win_ms = 25.0;
  double hop_ms = 10.0;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  double log_floor = 1e-10;
};

// frames = floor((len - win) / hop) + 1 rows, n_mels columns,
// each value ln(max(mel_energy, log_floor)).
FeatureMatrix log_mel(const AudioBuffer& buf, const MelConfig& cfg);

}  // namespace asrser::audio
