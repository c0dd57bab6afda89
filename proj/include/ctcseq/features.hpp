// ctcseq/features.hpp — log-spectrogram extraction and time downsampling.
#pragma once

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "ctcseq/common.hpp"
#include "ctcseq/fft.hpp"
#include "ctcseq/matrix.hpp"
#include "ctcseq/wav.hpp"

namespace ctcseq {

struct FeatureConfig {
  double window_ms = 20.0;
  double hop_ms = 10.0;
  std::size_t fft_size = 512;
  double log_floor = 1e-10;
  bool normalize = true;
};

struct FeatureMatrix {
  Matrix frames;  // T x F
  double frame_rate_hz = 0.0;
  FeatureConfig config;

  std::size_t num_frames() const { return frames.rows; }
  std::size_t num_bins() const { return frames.cols; }
};

// Window/hop lengths are defined in time and rounded to the nearest sample
// (ties to even), so non-22050 rates work unchanged.
inline std::size_t samples_for_ms(double ms, int rate_hz) {
  double exact = ms * static_cast<double>(rate_hz) / 1000.0;
  return static_cast<std::size_t>(std::nearbyint(exact));
}

inline std::size_t frame_count(std::size_t num_samples, std::size_t window_len,
                               std::size_t hop_len) {
  return (num_samples - window_len) / hop_len + 1;
}

// frame t = log(max(|DFT(hann . segment_t)|^2, log_floor)) over the first
// fft_size/2 + 1 bins; optional per-utterance per-bin mean/stddev scaling.
inline FeatureMatrix log_spectrogram(const AudioClip& clip, const FeatureConfig& cfg) {
  if (cfg.hop_ms > cfg.window_ms)
    throw invalid_argument_error("hop_ms must not exceed window_ms");
  if (!is_power_of_two(cfg.fft_size))
    throw invalid_argument_error("fft_size must be a power of two");
  if (cfg.log_floor <= 0.0)
    throw invalid_argument_error("log_floor must be positive");

  const std::size_t window_len = samples_for_ms(cfg.window_ms, clip.sample_rate_hz);
  const std::size_t hop_len = samples_for_ms(cfg.hop_ms, clip.sample_rate_hz);
  if (window_len == 0 || hop_len == 0)
    throw invalid_argument_error("window/hop too small for the sample rate");
  if (cfg.fft_size < window_len)
    throw invalid_argument_error("fft_size (" + std::to_string(cfg.fft_size) +
                                 ") smaller than window length (" +
                                 std::to_string(window_len) + ")");
  if (clip.samples.size() < window_len)
    throw too_short_error("clip of " + std::to_string(clip.samples.size()) +
                          " samples is shorter than one analysis window (" +
                          std::to_string(window_len) + ")");

  const std::size_t T = frame_count(clip.samples.size(), window_len, hop_len);
  const std::size_t F = cfg.fft_size / 2 + 1;

  std::vector<double> window(window_len);
  for (std::size_t n = 0; n < window_len; ++n)
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                     static_cast<double>(window_len));

  FeatureMatrix feat;
  feat.frames = Matrix(T, F);
  feat.config = cfg;
  feat.frame_rate_hz = static_cast<double>(clip.sample_rate_hz) / static_cast<double>(hop_len);

  std::vector<std::complex<double>> buf(cfg.fft_size);
  for (std::size_t t = 0; t < T; ++t) {
    const double* seg = clip.samples.data() + t * hop_len;
    for (std::size_t n = 0; n < window_len; ++n) buf[n] = seg[n] * window[n];
    std::fill(buf.begin() + static_cast<std::ptrdiff_t>(window_len), buf.end(),
              std::complex<double>(0.0, 0.0));
    fft_inplace(buf);
    double* row = feat.frames.row(t);
    for (std::size_t k = 0; k < F; ++k)
      row[k] = std::log(std::max(std::norm(buf[k]), cfg.log_floor));
  }

  if (cfg.normalize) {
    for (std::size_t k = 0; k < F; ++k) {
      double mean = 0.0;
      for (std::size_t t = 0; t < T; ++t) mean += feat.frames(t, k);
      mean /= static_cast<double>(T);
      double var = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        double d = feat.frames(t, k) - mean;
        var += d * d;
      }
      double sd = std::sqrt(var / static_cast<double>(T));
      for (std::size_t t = 0; t < T; ++t)
        feat.frames(t, k) = (feat.frames(t, k) - mean) / (sd + 1e-8);
    }
  }
  return feat;
}

// Max-pool groups of `factor` consecutive frames; a trailing partial group is
// pooled as-is. Stands in for the pooling stages that shorten T by 4.
inline FeatureMatrix downsample_time(const FeatureMatrix& feat, std::size_t factor) {
  if (factor == 0) throw invalid_argument_error("downsample factor must be >= 1");
  if (factor == 1) return feat;
  const std::size_t T = feat.frames.rows;
  const std::size_t F = feat.frames.cols;
  const std::size_t T_out = (T + factor - 1) / factor;
  FeatureMatrix out;
  out.frames = Matrix(T_out, F);
  out.config = feat.config;
  out.frame_rate_hz = feat.frame_rate_hz / static_cast<double>(factor);
  for (std::size_t j = 0; j < T_out; ++j) {
    const std::size_t begin = j * factor;
    const std::size_t end = std::min(T, begin + factor);
    double* dst = out.frames.row(j);
    for (std::size_t k = 0; k < F; ++k) dst[k] = feat.frames(begin, k);
    for (std::size_t t = begin + 1; t < end; ++t) {
      const double* src = feat.frames.row(t);
      for (std::size_t k = 0; k < F; ++k) dst[k] = std::max(dst[k], src[k]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature dump: "FTRS", T and F as little-endian uint32, then T*F float32
// values row-major.

inline void save_features(const std::string& path, const Matrix& frames) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw validation_error("cannot write feature file: " + path);
  out.write("FTRS", 4);
  auto put_u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(b, 4);
  };
  put_u32(static_cast<std::uint32_t>(frames.rows));
  put_u32(static_cast<std::uint32_t>(frames.cols));
  for (double v : frames.data) {
    float f = static_cast<float>(v);
    static_assert(sizeof(float) == 4);
    char b[4];
    std::memcpy(b, &f, 4);
    out.write(b, 4);
  }
}

inline Matrix load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw corrupt_file_error("cannot open feature file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "FTRS", 4) != 0)
    throw corrupt_file_error("bad magic in feature file: " + path);
  auto get_u32 = [&]() -> std::uint32_t {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
      throw corrupt_file_error("truncated feature file: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  };
  std::uint32_t T = get_u32();
  std::uint32_t F = get_u32();
  Matrix m(T, F);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    char b[4];
    if (!in.read(b, 4)) throw corrupt_file_error("truncated feature file: " + path);
    float f;
    std::memcpy(&f, b, 4);
    m.data[i] = static_cast<double>(f);
  }
  return m;
}

}  // namespace ctcseq
