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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fluentcrit/io.hpp"
#include "test_support.hpp"

using namespace fluentcrit;
using fluentcrit::testing::random_f32_mel;

namespace {

MelSpectrogram round_trip(const MelSpectrogram& mel) {
  std::stringstream buf;
  write_mel(mel, buf);
  return read_mel(buf);
}

std::vector<unsigned char> to_bytes(const std::vector<char>& v) { return {v.begin(), v.end()}; }

std::size_t format_offset(const std::vector<unsigned char>& bytes) {
  try {
    decode_mel(bytes);
  } catch (const FormatError& e) {
    return e.offset();
  }
  FAIL("expected FormatError");
  return 0;
}

}  // namespace

TEST_CASE("MELF header layout", "[io]") {
  const MelSpectrogram mel(MelConfig{}, 0);
  const auto bytes = encode_mel(mel);
  REQUIRE(bytes.size() == kMelfHeaderSize);
  REQUIRE(std::string(bytes.data(), 4) == "MELF");
  REQUIRE(static_cast<unsigned char>(bytes[4]) == 1);
  REQUIRE(static_cast<unsigned char>(bytes[5]) == 0);
  // n_mels = 80 little-endian at offset 10.
  REQUIRE(static_cast<unsigned char>(bytes[10]) == 80);
  // sample rate 22050 = 0x5622 at offset 14.
  REQUIRE(static_cast<unsigned char>(bytes[14]) == 0x22);
  REQUIRE(static_cast<unsigned char>(bytes[15]) == 0x56);
}

TEST_CASE("MELF round trips", "[io]") {
  SECTION("empty 0x80") {
    const MelSpectrogram mel(MelConfig{}, 0);
    const auto back = round_trip(mel);
    REQUIRE(back == mel);
    REQUIRE(back.n_frames() == 0);
  }
  SECTION("random 100x80 is bit-equal") {
    SeededRng rng(3);
    const auto mel = random_f32_mel(100, 80, rng);
    REQUIRE(round_trip(mel) == mel);
  }
  SECTION("random shapes and configs") {
    SeededRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      auto mel = random_f32_mel(rng.index(40), 1 + rng.index(96), rng);
      MelConfig cfg = mel.config();
      cfg.hop_size = 64 + static_cast<std::uint32_t>(rng.index(256));
      cfg.fmin_hz = static_cast<float>(rng.uniform() * 100.0);
      cfg.log_floor = static_cast<float>(1e-6 + rng.uniform() * 1e-3);
      mel = MelSpectrogram(cfg, mel.n_frames(), std::vector<double>(mel.data().begin(), mel.data().end()));
      REQUIRE(round_trip(mel) == mel);
    }
  }
}

TEST_CASE("MELF decoding errors carry byte offsets", "[io]") {
  SeededRng rng(5);
  const auto good = to_bytes(encode_mel(random_f32_mel(4, 8, rng)));

  auto bad_magic = good;
  bad_magic[0] = bad_magic[1] = bad_magic[2] = bad_magic[3] = 'X';
  REQUIRE(format_offset(bad_magic) == 0);

  auto bad_version = good;
  bad_version[4] = 2;
  REQUIRE(format_offset(bad_version) == 4);

  auto truncated_header = std::vector<unsigned char>(good.begin(), good.begin() + 20);
  REQUIRE(format_offset(truncated_header) == 18);

  auto truncated_payload = std::vector<unsigned char>(good.begin(), good.end() - 3);
  REQUIRE(format_offset(truncated_payload) == truncated_payload.size());

  auto trailing = good;
  trailing.push_back(0);
  REQUIRE(format_offset(trailing) == good.size());

  auto nan_entry = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(&nan_entry[kMelfHeaderSize + 8], &nan, 4);
  REQUIRE(format_offset(nan_entry) == kMelfHeaderSize + 8);

  auto zero_hop = good;
  zero_hop[18] = zero_hop[19] = zero_hop[20] = zero_hop[21] = 0;
  REQUIRE(format_offset(zero_hop) == 10);
}

TEST_CASE("MELF decoder survives random corruption", "[io][fuzz]") {
  SeededRng rng(99);
  const auto good = to_bytes(encode_mel(random_f32_mel(6, 10, rng)));
  for (int trial = 0; trial < 2000; ++trial) {
    auto bytes = good;
    const std::size_t flips = 1 + rng.index(4);
    for (std::size_t k = 0; k < flips; ++k)
      bytes[rng.index(bytes.size())] = static_cast<unsigned char>(rng.index(256));
    if (rng.index(4) == 0) bytes.resize(rng.index(bytes.size()));
    try {
      const auto mel = decode_mel(bytes);
      REQUIRE(mel.size() == mel.n_frames() * mel.n_mels());
    } catch (const FormatError& e) {
      REQUIRE(e.offset() <= bytes.size());
    }
  }
}

TEST_CASE("write_mel rejects values that do not fit f32", "[io]") {
  MelSpectrogram mel(testing::small_config(2), 1);
  mel.at(0, 0) = std::numeric_limits<double>::infinity();
  std::stringstream buf;
  REQUIRE_THROWS_AS(write_mel(mel, buf), Error);
  mel.at(0, 0) = 1e300;
  REQUIRE_THROWS_AS(write_mel(mel, buf), Error);
}

TEST_CASE("PROS embeddings round trip", "[io]") {
  const std::vector<double> v{0.5, -0.25, 3.0, 1.0 / 1024.0};
  std::stringstream buf;
  write_pros(v, buf);
  REQUIRE(read_pros(buf) == v);

  std::vector<unsigned char> bad{'P', 'R', 'O', 'X', 1, 0, 0, 0, 0, 0, 0, 0};
  REQUIRE_THROWS_AS(decode_pros(bad), FormatError);
  std::vector<unsigned char> zero_dim{'P', 'R', 'O', 'S', 0, 0, 0, 0};
  REQUIRE_THROWS_AS(decode_pros(zero_dim), FormatError);
  std::vector<unsigned char> short_payload{'P', 'R', 'O', 'S', 2, 0, 0, 0, 0, 0, 0, 0};
  REQUIRE_THROWS_AS(decode_pros(short_payload), FormatError);
}

TEST_CASE("WAV ingestion accepts PCM16 mono only", "[io]") {
  AudioClip clip{{0.0, 0.5, -0.5, 0.25, -1.0}, 16000};
  std::stringstream buf;
  write_wav(clip, buf);
  const std::string bytes = buf.str();
  const auto back = read_wav(buf);
  REQUIRE(back.sample_rate_hz == 16000);
  REQUIRE(back.samples == clip.samples);

  auto patched = [&](std::size_t offset, unsigned char value) {
    std::vector<unsigned char> b(bytes.begin(), bytes.end());
    b[offset] = value;
    return b;
  };
  // fmt chunk body starts at byte 20: format, channels, rate, byte rate, align, bits.
  REQUIRE_THROWS_AS(decode_wav(patched(20, 3)), FormatError);   // IEEE float
  REQUIRE_THROWS_AS(decode_wav(patched(22, 2)), FormatError);   // stereo
  REQUIRE_THROWS_AS(decode_wav(patched(34, 8)), FormatError);   // 8-bit
  REQUIRE_THROWS_AS(decode_wav(patched(0, 'X')), FormatError);
  std::vector<unsigned char> truncated(bytes.begin(), bytes.end() - 4);
  REQUIRE_THROWS_AS(decode_wav(truncated), FormatError);
}
