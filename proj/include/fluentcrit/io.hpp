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

// Binary formats: MELF spectrogram files, PROS embedding files, and 16-bit
// PCM mono WAV ingestion. All multi-byte fields are little-endian.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fluentcrit/error.hpp"
#include "fluentcrit/spectral.hpp"

namespace fluentcrit {

inline constexpr std::uint16_t kMelfVersion = 1;
inline constexpr std::size_t kMelfHeaderSize = 42;

namespace detail {

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw FormatError(pos_, std::string("truncated input while reading ") + what);
  }
  std::string tag(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }

 private:
  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
};

inline std::vector<unsigned char> slurp(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void flush(std::ostream& out, const ByteWriter& w) {
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw Error(ErrorKind::InvalidArgument, "failed to write output stream");
}

inline float to_f32_checked(double v, const char* what) {
  if (!std::isfinite(v) || std::fabs(v) > std::numeric_limits<float>::max())
    throw Error(ErrorKind::InvalidArgument,
                std::string(what) + " is not representable as a finite f32");
  return static_cast<float>(v);
}

}  // namespace detail

// MELF layout: "MELF" | version u16 | n_frames u32 | n_mels u32 | sample_rate u32
// | hop u32 | n_fft u32 | win u32 | fmin f32 | fmax f32 | log_floor f32
// | data f32[n_frames * n_mels], row-major.

inline std::vector<char> encode_mel(const MelSpectrogram& mel) {
  const auto& cfg = mel.config();
  if (mel.n_frames() > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorKind::InvalidArgument, "too many frames for MELF");
  detail::ByteWriter w;
  w.bytes("MELF");
  w.u16(kMelfVersion);
  w.u32(static_cast<std::uint32_t>(mel.n_frames()));
  w.u32(cfg.n_mels);
  w.u32(cfg.sample_rate_hz);
  w.u32(cfg.hop_size);
  w.u32(cfg.n_fft);
  w.u32(cfg.win_size);
  w.f32(cfg.fmin_hz);
  w.f32(cfg.fmax_hz);
  w.f32(cfg.log_floor);
  for (double v : mel.data()) w.f32(detail::to_f32_checked(v, "spectrogram entry"));
  return w.buffer();
}

inline void write_mel(const MelSpectrogram& mel, std::ostream& sink) {
  const auto bytes = encode_mel(mel);
  sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw Error(ErrorKind::InvalidArgument, "failed to write MELF stream");
}

inline MelSpectrogram decode_mel(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  if (r.tag(4, "magic") != "MELF") throw FormatError(0, "bad magic, expected \"MELF\"");
  const std::uint16_t version = r.u16("version");
  if (version != kMelfVersion)
    throw FormatError(4, "unsupported MELF version " + std::to_string(version));
  const std::uint32_t n_frames = r.u32("n_frames");
  MelConfig cfg;
  cfg.n_mels = r.u32("n_mels");
  cfg.sample_rate_hz = r.u32("sample_rate");
  cfg.hop_size = r.u32("hop");
  cfg.n_fft = r.u32("n_fft");
  cfg.win_size = r.u32("win");
  cfg.fmin_hz = r.f32("fmin");
  cfg.fmax_hz = r.f32("fmax");
  cfg.log_floor = r.f32("log_floor");
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw FormatError(10, std::string("invalid header: ") + e.what());
  }
  const std::uint64_t count = static_cast<std::uint64_t>(n_frames) * cfg.n_mels;
  if (count > r.remaining() / 4)
    throw FormatError(r.offset() + r.remaining(),
                      "truncated payload: expected " + std::to_string(count * 4) + " bytes, got " +
                          std::to_string(r.remaining()));
  std::vector<double> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    const float v = r.f32("data");
    if (!std::isfinite(v)) throw FormatError(at, "non-finite spectrogram entry");
    data[i] = v;
  }
  if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes after payload");
  return {cfg, n_frames, std::move(data)};
}

inline MelSpectrogram read_mel(std::istream& source) {
  const auto bytes = detail::slurp(source);
  return decode_mel(bytes);
}

// PROS layout: "PROS" | dim u32 | data f32[dim].

inline void write_pros(std::span<const double> vec, std::ostream& sink) {
  detail::ByteWriter w;
  w.bytes("PROS");
  w.u32(static_cast<std::uint32_t>(vec.size()));
  for (double v : vec) w.f32(detail::to_f32_checked(v, "embedding entry"));
  detail::flush(sink, w);
}

inline std::vector<double> decode_pros(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  if (r.tag(4, "magic") != "PROS") throw FormatError(0, "bad magic, expected \"PROS\"");
  const std::uint32_t dim = r.u32("dim");
  if (dim == 0) throw FormatError(4, "embedding dimension must be positive");
  if (dim > r.remaining() / 4)
    throw FormatError(r.offset() + r.remaining(), "truncated embedding payload");
  std::vector<double> vec(dim);
  for (auto& v : vec) {
    const std::size_t at = r.offset();
    const float f = r.f32("data");
    if (!std::isfinite(f)) throw FormatError(at, "non-finite embedding entry");
    v = f;
  }
  if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes after payload");
  return vec;
}

inline std::vector<double> read_pros(std::istream& source) {
  const auto bytes = detail::slurp(source);
  return decode_pros(bytes);
}

/// PCM 16-bit mono RIFF/WAVE. Anything else is rejected with FormatError.
inline AudioClip decode_wav(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  if (r.tag(4, "RIFF tag") != "RIFF") throw FormatError(0, "not a RIFF file");
  r.u32("RIFF size");
  if (r.tag(4, "WAVE tag") != "WAVE") throw FormatError(8, "not a WAVE file");
  AudioClip clip;
  bool have_fmt = false;
  while (r.remaining() > 0) {
    const std::size_t chunk_at = r.offset();
    const std::string id = r.tag(4, "chunk id");
    const std::uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      if (size < 16) throw FormatError(chunk_at, "fmt chunk too small");
      const std::size_t fmt_at = r.offset();
      const std::uint16_t format = r.u16("audio format");
      const std::uint16_t channels = r.u16("channel count");
      clip.sample_rate_hz = r.u32("sample rate");
      r.u32("byte rate");
      r.u16("block align");
      const std::uint16_t bits = r.u16("bits per sample");
      if (format != 1) throw FormatError(fmt_at, "only PCM (format 1) WAV is supported");
      if (channels != 1) throw FormatError(fmt_at + 2, "only mono WAV is supported");
      if (clip.sample_rate_hz == 0) throw FormatError(fmt_at + 4, "zero sample rate");
      if (bits != 16) throw FormatError(fmt_at + 14, "only 16-bit WAV is supported");
      r.skip(size - 16 + (size & 1U), "fmt chunk padding");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(chunk_at, "data chunk before fmt chunk");
      if (size % 2 != 0) throw FormatError(chunk_at + 4, "odd data size for 16-bit samples");
      r.need(size, "sample data");
      clip.samples.resize(size / 2);
      for (auto& s : clip.samples)
        s = static_cast<std::int16_t>(r.u16("sample")) / 32768.0;
      return clip;
    } else {
      r.skip(size + (size & 1U), "chunk body");
    }
  }
  throw FormatError(r.offset(), "no data chunk");
}

inline AudioClip read_wav(std::istream& source) {
  const auto bytes = detail::slurp(source);
  return decode_wav(bytes);
}

/// Samples are clipped to [-1, 1] and quantized to 16 bits.
inline void write_wav(const AudioClip& clip, std::ostream& sink) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  detail::ByteWriter w;
  w.bytes("RIFF");
  w.u32(36 + data_bytes);
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  w.u16(1);
  w.u16(1);
  w.u32(clip.sample_rate_hz);
  w.u32(clip.sample_rate_hz * 2);
  w.u16(2);
  w.u16(16);
  w.bytes("data");
  w.u32(data_bytes);
  for (double s : clip.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(std::min(clipped * 32768.0, 32767.0)));
    w.u16(static_cast<std::uint16_t>(q));
  }
  detail::flush(sink, w);
}

}  // namespace fluentcrit
