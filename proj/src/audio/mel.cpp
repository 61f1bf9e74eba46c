#include "asrser/audio/mel.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "asrser/common.hpp"

namespace asrser::audio {

namespace {

constexpr double kPi = 3.14159265358979323846;

// In-place iterative radix-2 FFT.
void fft(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        auto u = a[i + k];
        auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filterbank, n_mels x (n_fft/2 + 1).
Eigen::MatrixXd mel_filterbank(const MelConfig& cfg, int n_fft, int sample_rate) {
  const int n_bins = n_fft / 2 + 1;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, n_bins);

  double mel_lo = hz_to_mel(cfg.fmin_hz);
  double mel_hi = hz_to_mel(cfg.fmax_hz);
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));

  for (int m = 0; m < cfg.n_mels; ++m) {
    double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f > left && f < center)
        w = (f - left) / (center - left);
      else if (f >= center && f < right)
        w = (right - f) / (right - center);
      if (w > 0.0) fb(m, k) = w;
    }
  }
  return fb;
}

}  // namespace

FeatureMatrix log_mel(const AudioBuffer& buf, const MelConfig& cfg) {
  if (cfg.n_mels < 1 || cfg.win_ms <= 0 || cfg.hop_ms <= 0 ||
      cfg.hop_ms > cfg.win_ms || cfg.fmin_hz < 0 ||
      cfg.fmin_hz >= cfg.fmax_hz ||
      cfg.fmax_hz > buf.sample_rate_hz / 2.0 || cfg.log_floor <= 0)
    throw Error(ErrorCode::BadConfig, "log_mel: invalid MelConfig");

  const int win = static_cast<int>(std::lround(cfg.win_ms * buf.sample_rate_hz / 1000.0));
  const int hop = static_cast<int>(std::lround(cfg.hop_ms * buf.sample_rate_hz / 1000.0));
  const int len = static_cast<int>(buf.samples.size());
  if (len < win)
    throw Error(ErrorCode::BufferTooShort, "log_mel: buffer shorter than one window");

  int n_fft = 1;
  while (n_fft < win) n_fft <<= 1;
  const int n_bins = n_fft / 2 + 1;
  const int n_frames = (len - win) / hop + 1;

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (win - 1));

  Eigen::MatrixXd fb = mel_filterbank(cfg, n_fft, buf.sample_rate_hz);

  FeatureMatrix out(n_frames, cfg.n_mels);
  std::vector<std::complex<double>> frame(n_fft);
  Eigen::VectorXd power(n_bins);
  for (int t = 0; t < n_frames; ++t) {
    const int start = t * hop;
    for (int i = 0; i < win; ++i)
      frame[i] = std::complex<double>(buf.samples[start + i] * window[i], 0.0);
    for (int i = win; i < n_fft; ++i) frame[i] = 0.0;
    fft(frame);
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(frame[k]);
    Eigen::VectorXd mel = fb * power;
    for (int m = 0; m < cfg.n_mels; ++m)
      out(t, m) = std::log(std::max(mel[m], cfg.log_floor));
  }
  return out;
}

}  // namespace asrser::audio
