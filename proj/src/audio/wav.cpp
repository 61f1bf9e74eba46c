#include "asrser/audio/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "asrser/common.hpp"

namespace asrser::audio {

namespace {

uint32_t read_u32(const char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;  // little-endian hosts only
}

uint16_t read_u16(const char* p) {
  uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

}  // namespace

AudioBuffer load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open wav file: " + path);

  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (data.size() < 12 || data.compare(0, 4, "RIFF") != 0 ||
      data.compare(8, 4, "WAVE") != 0) {
    throw Error(ErrorCode::UnsupportedEncoding, "not a RIFF/WAVE file: " + path);
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  const char* pcm = nullptr;
  uint32_t pcm_len = 0;

  size_t pos = 12;
  while (pos + 8 <= data.size()) {
    std::string chunk_id = data.substr(pos, 4);
    uint32_t chunk_len = read_u32(data.data() + pos + 4);
    size_t body = pos + 8;
    if (body + chunk_len > data.size()) chunk_len = static_cast<uint32_t>(data.size() - body);
    if (chunk_id == "fmt ") {
      if (chunk_len < 16)
        throw Error(ErrorCode::UnsupportedEncoding, "truncated fmt chunk: " + path);
      format = read_u16(data.data() + body);
      channels = read_u16(data.data() + body + 2);
      sample_rate = read_u32(data.data() + body + 4);
      bits = read_u16(data.data() + body + 14);
      have_fmt = true;
    } else if (chunk_id == "data") {
      pcm = data.data() + body;
      pcm_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);
  }

  if (!have_fmt || pcm == nullptr)
    throw Error(ErrorCode::UnsupportedEncoding, "missing fmt or data chunk: " + path);
  if (format != 1 || bits != 16)
    throw Error(ErrorCode::UnsupportedEncoding,
                "only PCM 16-bit supported: " + path);
  if (channels != 1)
    throw Error(ErrorCode::NotMono, "expected mono audio: " + path);
  if (pcm_len < 2) throw Error(ErrorCode::EmptyAudio, "empty audio: " + path);

  AudioBuffer buf;
  buf.sample_rate_hz = static_cast<int>(sample_rate);
  size_t n = pcm_len / 2;
  buf.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    int16_t s;
    std::memcpy(&s, pcm + 2 * i, 2);
    buf.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return buf;
}

void save_wav(const std::string& path, const AudioBuffer& buf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write wav file: " + path);

  uint32_t n = static_cast<uint32_t>(buf.samples.size());
  uint32_t data_len = n * 2;
  uint32_t riff_len = 36 + data_len;
  uint32_t rate = static_cast<uint32_t>(buf.sample_rate_hz);
  uint32_t byte_rate = rate * 2;

  char header[44];
  std::memcpy(header, "RIFF", 4);
  std::memcpy(header + 4, &riff_len, 4);
  std::memcpy(header + 8, "WAVEfmt ", 8);
  uint32_t fmt_len = 16;
  std::memcpy(header + 16, &fmt_len, 4);
  uint16_t format = 1, channels = 1, bits = 16, block_align = 2;
  std::memcpy(header + 20, &format, 2);
  std::memcpy(header + 22, &channels, 2);
  std::memcpy(header + 24, &rate, 4);
  std::memcpy(header + 28, &byte_rate, 4);
  std::memcpy(header + 32, &block_align, 2);
  std::memcpy(header + 34, &bits, 2);
  std::memcpy(header + 36, "data", 4);
  std::memcpy(header + 40, &data_len, 4);
  out.write(header, 44);

  std::vector<int16_t> pcm(n);
  for (uint32_t i = 0; i < n; ++i) {
    double x = buf.samples[i];
    long q = std::lround(x * 32768.0);
    if (q > 32767) q = 32767;
    if (q < -32768) q = -32768;
    pcm[i] = static_cast<int16_t>(q);
  }
  out.write(reinterpret_cast<const char*>(pcm.data()), data_len);
  if (!out) throw Error(ErrorCode::IoError, "short write: " + path);
}

}  // namespace asrser::audio
