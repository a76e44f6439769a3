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

#include <cstddef>
#include <vector>

#include "fluentcrit/alignment.hpp"
#include "fluentcrit/serialize.hpp"
#include "test_support.hpp"

using namespace fluentcrit;
using fluentcrit::testing::frame_grid;

namespace {

IntervalTier tier(const std::string& name, std::vector<Interval> intervals) {
  const double lo = intervals.front().xmin, hi = intervals.back().xmax;
  return {name, lo, hi, std::move(intervals)};
}

TextGridDoc hi_doc() {
  return {0.0, 0.5,
          {tier("words", {{0.0, 0.5, "hi"}}),
           tier("phones", {{0.0, 0.25, "HH"}, {0.25, 0.5, "AY"}})}};
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

// Direct reading of the assignment rule: the interval holding the frame's
// end time, clamped to the tier.
std::size_t oracle_interval(const IntervalTier& t, std::size_t f, const MelConfig& cfg) {
  const double end = (f + 1.0) * cfg.hop_size / cfg.sample_rate_hz;
  for (std::size_t k = 0; k < t.intervals.size(); ++k)
    if (end <= t.intervals[k].xmax + 1e-9) return k;
  return t.intervals.size() - 1;
}

void check_invariants(const AlignmentTable& t) {
  std::size_t silent = 0, voiced = 0;
  std::size_t last_p = 0, last_w = 0;
  for (std::size_t f = 0; f < t.n_frames; ++f) {
    const auto p = t.frame_to_phoneme[f];
    if (p == kSilence) {
      ++silent;
      REQUIRE(t.frame_to_word[f] == kSilence);
      continue;
    }
    REQUIRE(t.phoneme_to_word[p] == t.frame_to_word[f]);
    REQUIRE(p >= last_p);
    REQUIRE(t.frame_to_word[f] >= last_w);
    last_p = p;
    last_w = t.frame_to_word[f];
  }
  for (auto d : t.phoneme_durations) voiced += d;
  REQUIRE(voiced + silent == t.n_frames);
  std::size_t word_total = 0;
  for (auto d : t.word_durations) word_total += d;
  REQUIRE(word_total == voiced);
}

}  // namespace

TEST_CASE("half-second interval receives 43 frames", "[alignment]") {
  const MelConfig cfg;
  const TextGridDoc doc{0.0, 1.0,
                        {tier("phones", {{0.0, 0.5, "A"}, {0.5, 1.0, ""}}),
                         tier("words", {{0.0, 0.5, "a"}, {0.5, 1.0, ""}})}};
  const auto n = frames_for_duration(1.0, cfg);
  REQUIRE(n == 87);
  const auto t = build_alignment(doc, n, cfg);
  REQUIRE(t.word_durations == std::vector<std::size_t>{43});
  REQUIRE(t.word_ranges[0] == FrameRange{0, 43});
  REQUIRE(t.frame_to_word[42] == 0);
  REQUIRE(t.frame_to_word[43] == kSilence);
}

TEST_CASE("hi fixture with 44 frames", "[alignment]") {
  const MelConfig cfg;
  const auto t = build_alignment(hi_doc(), 44, cfg);
  REQUIRE(t.words == std::vector<std::string>{"hi"});
  REQUIRE(t.word_durations == std::vector<std::size_t>{44});
  REQUIRE(t.phoneme_durations[0] + t.phoneme_durations[1] == 44);
  REQUIRE(t.phoneme_to_word == std::vector<std::size_t>{0, 0});
  check_invariants(t);
}

TEST_CASE("all-silence grid", "[alignment]") {
  const MelConfig cfg;
  const TextGridDoc doc{0.0, 0.5, {tier("phones", {{0.0, 0.5, "sil"}}), tier("words", {{0.0, 0.5, ""}})}};
  const auto t = build_alignment(doc, 44, cfg);
  REQUIRE(t.word_count() == 0);
  for (std::size_t f = 0; f < 44; ++f) {
    REQUIRE(t.frame_to_phoneme[f] == kSilence);
    REQUIRE(t.frame_to_word[f] == kSilence);
  }
}

TEST_CASE("word spans include inner silence only", "[alignment]") {
  const auto cfg = testing::small_config(4);
  std::size_t n = 0;
  const auto doc = frame_grid({{4, 6}, {5, 10}}, {10, 5, 3}, cfg, &n);
  const auto t = build_alignment(doc, n, cfg);
  REQUIRE(word_span_frames(t, 0, 0) == FrameRange{10, 20});
  REQUIRE(word_span_frames(t, 1, 1) == FrameRange{25, 40});
  REQUIRE(word_span_frames(t, 0, 1) == FrameRange{10, 40});
  REQUIRE(kind_of([&] { word_span_frames(t, 1, 0); }) == ErrorKind::IndexError);
  REQUIRE(kind_of([&] { word_span_frames(t, 0, 2); }) == ErrorKind::IndexError);
}

TEST_CASE("frame budget and degenerate units", "[alignment]") {
  const MelConfig cfg;
  REQUIRE_NOTHROW(build_alignment(hi_doc(), 43, cfg));
  REQUIRE_NOTHROW(build_alignment(hi_doc(), 45, cfg));
  REQUIRE(kind_of([&] { build_alignment(hi_doc(), 42, cfg); }) == ErrorKind::ConfigMismatch);
  REQUIRE(kind_of([&] { build_alignment(hi_doc(), 46, cfg); }) == ErrorKind::ConfigMismatch);

  // A phone shorter than a hop that holds no frame end.
  const TextGridDoc tiny{0.0, 0.5,
                         {tier("phones", {{0.0, 0.1, "A"}, {0.1, 0.101, "B"}, {0.101, 0.5, "C"}}),
                          tier("words", {{0.0, 0.5, "w"}})}};
  REQUIRE(kind_of([&] { build_alignment(tiny, 44, cfg); }) == ErrorKind::DegenerateAlignment);

  const TextGridDoc orphan{0.0, 0.5,
                           {tier("phones", {{0.0, 0.5, "A"}}),
                            tier("words", {{0.0, 0.25, "w"}, {0.25, 0.5, ""}})}};
  REQUIRE(kind_of([&] { build_alignment(orphan, 44, cfg); }) == ErrorKind::DegenerateAlignment);
}

TEST_CASE("silence labels are configurable", "[alignment]") {
  const MelConfig cfg;
  const TextGridDoc doc{0.0, 0.5,
                        {tier("phones", {{0.0, 0.25, "HH"}, {0.25, 0.5, "<pause>"}}),
                         tier("words", {{0.0, 0.25, "hm"}, {0.25, 0.5, ""}})}};
  REQUIRE(kind_of([&] { build_alignment(doc, 44, cfg); }) == ErrorKind::DegenerateAlignment);
  AlignmentOptions opts;
  opts.silence_labels.insert("<pause>");
  const auto t = build_alignment(doc, 44, cfg, opts);
  REQUIRE(t.phonemes == std::vector<std::string>{"HH"});
}

TEST_CASE("randomized grids satisfy partition, consistency and monotonicity", "[alignment]") {
  SeededRng rng(5);
  const MelConfig cfg;
  for (int trial = 0; trial < 300; ++trial) {
    const auto doc = testing::random_continuous_grid(rng, cfg);
    const auto n = frames_for_duration(doc.xmax, cfg) + rng.index(3) - 1;
    const auto t = build_alignment(doc, n, cfg);
    check_invariants(t);
    const auto& phones = *doc.find("phones");
    for (std::size_t f = 0; f < n; ++f) {
      const auto& iv = phones.intervals[oracle_interval(phones, f, cfg)];
      const bool silent = iv.label.empty() || iv.label == "sil";
      REQUIRE((t.frame_to_phoneme[f] == kSilence) == silent);
      if (!silent) REQUIRE(t.phonemes[t.frame_to_phoneme[f]] == iv.label);
    }
  }
}

TEST_CASE("alignment JSON round trip", "[alignment][json]") {
  SeededRng rng(8);
  const auto cfg = testing::small_config(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = testing::random_alignment(rng, 6, cfg);
    const auto text = alignment_to_json(a.table).dump();
    const auto back = alignment_from_json(parse_json_text(text));
    REQUIRE(back.frame_to_phoneme == a.table.frame_to_phoneme);
    REQUIRE(back.frame_to_word == a.table.frame_to_word);
    REQUIRE(back.phonemes == a.table.phonemes);
    REQUIRE(back.words == a.table.words);
    REQUIRE(back.phoneme_to_word == a.table.phoneme_to_word);
    REQUIRE(back.word_ranges == a.table.word_ranges);
    REQUIRE(alignment_to_json(back).dump() == text);
  }
  auto j = alignment_to_json(testing::random_alignment(rng, 3, cfg).table);
  j["frame_to_word"][0] = 99;
  REQUIRE(kind_of([&] { alignment_from_json(j); }) == ErrorKind::ParseError);
  REQUIRE(kind_of([&] { parse_json_text("{\"n_frames\": "); }) == ErrorKind::ParseError);
  REQUIRE(kind_of([&] { alignment_from_json(Json::object()); }) == ErrorKind::ParseError);
}
