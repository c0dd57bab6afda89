// ctcseq/wav.hpp — RIFF/WAVE reader and writer (PCM 16-bit mono).
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ctcseq/common.hpp"

namespace ctcseq {

struct AudioClip {
  std::vector<double> samples;  // normalized to [-1, 1]
  int sample_rate_hz = 0;

  double duration_s() const {
    return sample_rate_hz > 0
               ? static_cast<double>(samples.size()) / sample_rate_hz
               : 0.0;
  }
};

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void put_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace detail

// Parses a RIFF/WAVE container. Accepts only PCM (format code 1), 16-bit,
// single channel; any sample rate is allowed and propagated.
inline AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw corrupt_file_error("cannot open WAV file: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());

  using detail::read_u16le;
  using detail::read_u32le;

  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw corrupt_file_error("not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data_ptr = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    char id[5] = {0};
    std::memcpy(id, buf.data() + pos, 4);
    std::uint32_t len = read_u32le(buf.data() + pos + 4);
    pos += 8;
    if (pos + len > buf.size())
      throw corrupt_file_error("truncated '" + std::string(id) + "' chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw corrupt_file_error("fmt chunk too small in " + path);
      format = read_u16le(buf.data() + pos);
      channels = read_u16le(buf.data() + pos + 2);
      rate = read_u32le(buf.data() + pos + 4);
      bits = read_u16le(buf.data() + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = buf.data() + pos;
      data_len = len;
    }
    pos += len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_ptr == nullptr)
    throw corrupt_file_error("missing fmt or data chunk in " + path);
  if (format != 1)
    throw unsupported_format_error("only PCM (format 1) supported, got format " +
                                   std::to_string(format) + " in " + path);
  if (channels != 1)
    throw unsupported_format_error("only mono supported, got " +
                                   std::to_string(channels) + " channels in " + path);
  if (bits != 16)
    throw unsupported_format_error("only 16-bit samples supported, got " +
                                   std::to_string(bits) + "-bit in " + path);
  if (rate == 0) throw corrupt_file_error("zero sample rate in " + path);

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(rate);
  std::size_t n = data_len / 2;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::int16_t s = static_cast<std::int16_t>(
        detail::read_u16le(data_ptr + 2 * i));
    clip.samples[i] = s / 32768.0;
  }
  return clip;
}

// Writes PCM 16-bit mono; samples are clamped to [-1, 1] and quantized by
// round(x * 32767).
inline void write_wav(const std::string& path, const std::vector<double>& samples,
                      int sample_rate_hz) {
  std::string out;
  out.reserve(44 + samples.size() * 2);
  std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
  out += "RIFF";
  detail::put_u32le(out, 36 + data_len);
  out += "WAVEfmt ";
  detail::put_u32le(out, 16);
  detail::put_u16le(out, 1);  // PCM
  detail::put_u16le(out, 1);  // mono
  detail::put_u32le(out, static_cast<std::uint32_t>(sample_rate_hz));
  detail::put_u32le(out, static_cast<std::uint32_t>(sample_rate_hz * 2));
  detail::put_u16le(out, 2);
  detail::put_u16le(out, 16);
  out += "data";
  detail::put_u32le(out, data_len);
  for (double x : samples) {
    double c = x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x);
    auto q = static_cast<std::int16_t>(std::lround(c * 32767.0));
    detail::put_u16le(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw validation_error("cannot write WAV file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace ctcseq
