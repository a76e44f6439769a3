// Copyright (c) 2026 The fluentcrit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fluentcrit/error.hpp"

namespace fluentcrit {

struct AudioClip {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  std::uint32_t sample_rate_hz = 22050;
};

/// STFT and filterbank parameters. The real-valued fields are single
/// precision because that is how they are stored in MELF headers.
struct MelConfig {
  std::uint32_t sample_rate_hz = 22050;
  std::uint32_t n_fft = 1024;
  std::uint32_t hop_size = 256;
  std::uint32_t win_size = 1024;
  std::uint32_t n_mels = 80;
  float fmin_hz = 0.0F;
  float fmax_hz = 8000.0F;
  float log_floor = 1e-5F;

  friend bool operator==(const MelConfig&, const MelConfig&) = default;

  void validate() const {
    auto fail = [](const std::string& msg) {
      throw Error(ErrorKind::InvalidArgument, "MelConfig: " + msg);
    };
    if (sample_rate_hz == 0) fail("sample_rate_hz must be positive");
    if (n_fft == 0 || (n_fft & (n_fft - 1)) != 0) fail("n_fft must be a power of two");
    if (hop_size == 0 || hop_size > win_size || win_size > n_fft)
      fail("require 0 < hop_size <= win_size <= n_fft");
    if (n_mels == 0) fail("n_mels must be at least 1");
    if (!(fmin_hz >= 0.0F) || !(fmin_hz < fmax_hz) ||
        !(static_cast<double>(fmax_hz) <= sample_rate_hz / 2.0))
      fail("require 0 <= fmin < fmax <= sample_rate/2");
    if (!(log_floor > 0.0F) || !std::isfinite(log_floor))
      fail("log_floor must be a positive finite value");
  }
};

/// Row-major frames x mel-bins matrix of natural-log mel energies.
/// Row i starts at i * hop_size / sample_rate_hz seconds.
class MelSpectrogram {
 public:
  MelSpectrogram() = default;
  MelSpectrogram(MelConfig config, std::size_t n_frames)
      : config_(config), n_frames_(n_frames),
        data_(n_frames * config.n_mels, 0.0) {}
  MelSpectrogram(MelConfig config, std::size_t n_frames, std::vector<double> data)
      : config_(config), n_frames_(n_frames), data_(std::move(data)) {
    if (data_.size() != n_frames_ * config_.n_mels)
      throw Error(ErrorKind::ShapeError, "data size does not match n_frames * n_mels");
  }

  const MelConfig& config() const noexcept { return config_; }
  std::size_t n_frames() const noexcept { return n_frames_; }
  std::size_t n_mels() const noexcept { return config_.n_mels; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> frame(std::size_t i) const {
    return {data_.data() + i * n_mels(), n_mels()};
  }
  std::span<double> frame(std::size_t i) {
    return {data_.data() + i * n_mels(), n_mels()};
  }
  double& at(std::size_t i, std::size_t bin) { return data_[i * n_mels() + bin]; }
  double at(std::size_t i, std::size_t bin) const { return data_[i * n_mels() + bin]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  double frame_time(std::size_t i) const {
    return static_cast<double>(i) * config_.hop_size / config_.sample_rate_hz;
  }

  bool same_shape(const MelSpectrogram& other) const {
    return n_frames_ == other.n_frames_ && n_mels() == other.n_mels();
  }

  /// Copy of frames [begin, end).
  MelSpectrogram slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > n_frames_)
      throw Error(ErrorKind::IndexError, "slice out of range");
    std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(begin * n_mels()),
                            data_.begin() + static_cast<std::ptrdiff_t>(end * n_mels()));
    return {config_, end - begin, std::move(out)};
  }

  friend bool operator==(const MelSpectrogram&, const MelSpectrogram&) = default;

 private:
  MelConfig config_{};
  std::size_t n_frames_ = 0;
  std::vector<double> data_;
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Band edges in Hz: n_mels + 2 points equally spaced on the mel scale.
inline std::vector<double> mel_band_edges(const MelConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin_hz);
  const double hi = hz_to_mel(cfg.fmax_hz);
  const std::size_t n = cfg.n_mels + 2;
  std::vector<double> edges(n);
  for (std::size_t i = 0; i < n; ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return edges;
}

inline std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  auto edges = mel_band_edges(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

/// Triangular filters, each scaled by 2 / bandwidth so every filter has the
/// same area. Returns n_mels rows of n_fft/2 + 1 weights.
inline std::vector<std::vector<double>> mel_filterbank(const MelConfig& cfg) {
  const std::size_t n_bins = cfg.n_fft / 2 + 1;
  const auto edges = mel_band_edges(cfg);
  std::vector<std::vector<double>> bank(cfg.n_mels, std::vector<double>(n_bins, 0.0));
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    const double norm = 2.0 / (right - left);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate_hz / cfg.n_fft;
      const double rise = (f - left) / (center - left);
      const double fall = (right - f) / (right - center);
      bank[m][k] = std::max(0.0, std::min(rise, fall)) * norm;
    }
  }
  return bank;
}

namespace detail {

// FFTW's planner is not reentrant; plan execution on private buffers is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n), &fftw_free),
        out_(fftw_alloc_complex(n / 2 + 1), &fftw_free) {
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(),
                                 static_cast<fftw_complex*>(out_.get()), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<double> input() { return {in_.get(), n_}; }

  /// Magnitudes of the n/2 + 1 non-negative frequency bins.
  void magnitudes(std::span<double> out) {
    fftw_execute(plan_);
    auto* spectrum = static_cast<fftw_complex*>(out_.get());
    for (std::size_t k = 0; k < n_ / 2 + 1; ++k)
      out[k] = std::hypot(spectrum[k][0], spectrum[k][1]);
  }

 private:
  std::size_t n_;
  std::unique_ptr<double, decltype(&fftw_free)> in_;
  std::unique_ptr<void, decltype(&fftw_free)> out_;
  fftw_plan plan_ = nullptr;
};

// Mirror index without repeating the edge sample, extended periodically so
// pads longer than the signal stay defined.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t len) {
  if (len == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (len - 1));
  std::ptrdiff_t j = i % period;
  if (j < 0) j += period;
  if (j >= static_cast<std::ptrdiff_t>(len)) j = period - j;
  return static_cast<std::size_t>(j);
}

}  // namespace detail

/// Periodic Hann window of win_size samples, zero-padded and centered in n_fft.
inline std::vector<double> stft_window(const MelConfig& cfg) {
  std::vector<double> window(cfg.n_fft, 0.0);
  const std::size_t offset = (cfg.n_fft - cfg.win_size) / 2;
  for (std::size_t i = 0; i < cfg.win_size; ++i)
    window[offset + i] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / cfg.win_size);
  return window;
}

inline std::size_t expected_frame_count(std::size_t n_samples, const MelConfig& cfg) {
  return n_samples / cfg.hop_size + 1;
}

/// Log-mel spectrogram: reflect-padded Hann STFT magnitudes, mel filterbank,
/// floor, natural log.
inline MelSpectrogram compute_mel(const AudioClip& clip, const MelConfig& cfg) {
  cfg.validate();
  if (clip.samples.empty()) throw Error(ErrorKind::EmptyInput, "audio clip has no samples");
  if (clip.sample_rate_hz != cfg.sample_rate_hz)
    throw Error(ErrorKind::ConfigMismatch,
                "clip sample rate " + std::to_string(clip.sample_rate_hz) +
                    " != config sample rate " + std::to_string(cfg.sample_rate_hz));
  for (double s : clip.samples)
    if (!std::isfinite(s)) throw Error(ErrorKind::InvalidArgument, "non-finite sample");

  const std::size_t len = clip.samples.size();
  const std::size_t n_frames = expected_frame_count(len, cfg);
  const auto pad = static_cast<std::ptrdiff_t>(cfg.n_fft / 2);
  const auto window = stft_window(cfg);
  const auto bank = mel_filterbank(cfg);
  const double log_floor = cfg.log_floor;

  MelSpectrogram mel(cfg, n_frames);
  detail::RealFft fft(cfg.n_fft);
  std::vector<double> mags(cfg.n_fft / 2 + 1);
  for (std::size_t t = 0; t < n_frames; ++t) {
    auto buf = fft.input();
    const auto start = static_cast<std::ptrdiff_t>(t * cfg.hop_size) - pad;
    for (std::size_t i = 0; i < cfg.n_fft; ++i)
      buf[i] = clip.samples[detail::reflect_index(start + static_cast<std::ptrdiff_t>(i), len)] *
               window[i];
    fft.magnitudes(mags);
    auto row = mel.frame(t);
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double energy = 0.0;
      for (std::size_t k = 0; k < mags.size(); ++k) energy += bank[m][k] * mags[k];
      row[m] = std::log(std::max(energy, log_floor));
    }
  }
  return mel;
}

}  // namespace fluentcrit
