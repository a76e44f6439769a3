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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "fluentcrit/error.hpp"
#include "fluentcrit/spectral.hpp"
#include "fluentcrit/textgrid.hpp"

namespace fluentcrit {

/// Half-open frame interval [begin, end).
struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin == end; }
  bool contains(std::size_t f) const noexcept { return f >= begin && f < end; }
  bool covers(const FrameRange& other) const noexcept {
    return other.begin >= begin && other.end <= end;
  }

  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

inline constexpr std::size_t kSilence = std::numeric_limits<std::size_t>::max();

struct AlignmentOptions {
  TierNames tiers;
  std::set<std::string> silence_labels{"", "sil", "sp", "spn"};
};

/// Frame -> phoneme -> word hierarchy. A frame is silent when its phone
/// interval is silent; silent frames carry kSilence in both maps.
struct AlignmentTable {
  std::size_t n_frames = 0;
  std::vector<std::size_t> frame_to_phoneme;
  std::vector<std::size_t> frame_to_word;
  std::vector<std::string> phonemes;
  std::vector<std::string> words;
  std::vector<std::size_t> phoneme_to_word;
  std::vector<std::size_t> phoneme_durations;
  std::vector<std::size_t> word_durations;
  // Derived: first to one-past-last frame of each unit. Word ranges may
  // contain silent frames between the word's phones.
  std::vector<FrameRange> phoneme_ranges;
  std::vector<FrameRange> word_ranges;

  std::size_t word_count() const noexcept { return words.size(); }

  std::size_t voiced_frames() const {
    std::size_t total = 0;
    for (auto d : phoneme_durations) total += d;
    return total;
  }

  /// Rebuilds durations and ranges from the per-frame maps, then checks every
  /// structural invariant. Used after deserialization.
  void finalize() {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::DegenerateAlignment, msg); };
    if (frame_to_phoneme.size() != n_frames || frame_to_word.size() != n_frames)
      fail("per-frame maps must have n_frames entries");
    if (phoneme_to_word.size() != phonemes.size()) fail("phoneme_to_word size mismatch");
    phoneme_durations.assign(phonemes.size(), 0);
    word_durations.assign(words.size(), 0);
    phoneme_ranges.assign(phonemes.size(), FrameRange{kSilence, 0});
    word_ranges.assign(words.size(), FrameRange{kSilence, 0});
    std::size_t last_p = 0, last_w = 0;
    bool seen = false;
    for (std::size_t f = 0; f < n_frames; ++f) {
      const std::size_t p = frame_to_phoneme[f];
      const std::size_t w = frame_to_word[f];
      if ((p == kSilence) != (w == kSilence)) fail("frame " + std::to_string(f) + " is half silent");
      if (p == kSilence) continue;
      if (p >= phonemes.size() || w >= words.size()) fail("frame index out of range");
      if (phoneme_to_word[p] != w) fail("frame " + std::to_string(f) + " phoneme/word mismatch");
      if (seen && (p < last_p || w < last_w)) fail("frame maps are not monotone");
      seen = true;
      last_p = p;
      last_w = w;
      ++phoneme_durations[p];
      ++word_durations[w];
      phoneme_ranges[p].begin = std::min(phoneme_ranges[p].begin, f);
      phoneme_ranges[p].end = f + 1;
      word_ranges[w].begin = std::min(word_ranges[w].begin, f);
      word_ranges[w].end = f + 1;
    }
    for (std::size_t p = 0; p < phonemes.size(); ++p) {
      if (phoneme_durations[p] == 0) fail("phoneme '" + phonemes[p] + "' has no frames");
      if (phoneme_durations[p] != phoneme_ranges[p].size())
        fail("phoneme '" + phonemes[p] + "' frames are not contiguous");
    }
    for (std::size_t w = 0; w < words.size(); ++w)
      if (word_durations[w] == 0) fail("word '" + words[w] + "' has no voiced frames");
  }
};

namespace detail {

// Interval index for each frame. Frame f occupies [t_f, t_{f+1}) and goes to
// the interval holding its end, so a frame straddling a boundary belongs to
// the later interval. Frames reaching past the tier end go to the last one.
inline std::vector<std::size_t> assign_frames(const IntervalTier& tier, std::size_t n_frames,
                                              const MelConfig& cfg) {
  std::vector<std::size_t> out(n_frames);
  std::size_t k = 0;
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double end = static_cast<double>(f + 1) * cfg.hop_size / cfg.sample_rate_hz;
    while (k + 1 < tier.intervals.size() && end > tier.intervals[k].xmax + kBoundaryTolerance) ++k;
    out[f] = k;
  }
  return out;
}

}  // namespace detail

/// Number of frames compute_mel produces for a clip of the given duration.
inline std::size_t frames_for_duration(double seconds, const MelConfig& cfg) {
  const double samples = seconds * cfg.sample_rate_hz;
  return static_cast<std::size_t>(std::floor(samples / cfg.hop_size + 1e-9)) + 1;
}

inline AlignmentTable build_alignment(const TextGridDoc& doc, std::size_t n_frames,
                                      const MelConfig& cfg, const AlignmentOptions& opts = {}) {
  cfg.validate();
  const IntervalTier* phones = doc.find(opts.tiers.phones);
  const IntervalTier* words = doc.find(opts.tiers.words);
  if (phones == nullptr || words == nullptr)
    throw Error(ErrorKind::InvalidArgument, "TextGrid lacks the phone or word tier");
  const std::size_t expected = frames_for_duration(doc.xmax, cfg);
  const auto diff = static_cast<long long>(n_frames) - static_cast<long long>(expected);
  if (diff > 1 || diff < -1)
    throw Error(ErrorKind::ConfigMismatch,
                "TextGrid duration implies " + std::to_string(expected) + " frames but mel has " +
                    std::to_string(n_frames));

  const auto phone_of = detail::assign_frames(*phones, n_frames, cfg);
  const auto word_of = detail::assign_frames(*words, n_frames, cfg);
  auto silent = [&](const Interval& iv) { return opts.silence_labels.contains(iv.label); };

  // Interval -> unit index, kSilence for silent intervals.
  auto number_units = [&](const IntervalTier& tier, std::vector<std::string>& labels) {
    std::vector<std::size_t> unit(tier.intervals.size(), kSilence);
    for (std::size_t i = 0; i < tier.intervals.size(); ++i) {
      if (silent(tier.intervals[i])) continue;
      unit[i] = labels.size();
      labels.push_back(tier.intervals[i].label);
    }
    return unit;
  };

  AlignmentTable table;
  table.n_frames = n_frames;
  const auto phone_unit = number_units(*phones, table.phonemes);
  const auto word_unit = number_units(*words, table.words);

  std::vector<std::size_t> phone_hits(phones->intervals.size(), 0);
  std::vector<std::size_t> word_hits(words->intervals.size(), 0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    ++phone_hits[phone_of[f]];
    ++word_hits[word_of[f]];
  }
  for (std::size_t i = 0; i < phones->intervals.size(); ++i)
    if (phone_unit[i] != kSilence && phone_hits[i] == 0)
      throw Error(ErrorKind::DegenerateAlignment,
                  "phone '" + phones->intervals[i].label + "' receives no frames");
  for (std::size_t i = 0; i < words->intervals.size(); ++i)
    if (word_unit[i] != kSilence && word_hits[i] == 0)
      throw Error(ErrorKind::DegenerateAlignment,
                  "word '" + words->intervals[i].label + "' receives no frames");

  table.frame_to_phoneme.resize(n_frames);
  table.frame_to_word.resize(n_frames);
  table.phoneme_to_word.assign(table.phonemes.size(), kSilence);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t p = phone_unit[phone_of[f]];
    const std::size_t w = word_unit[word_of[f]];
    if (p == kSilence) {
      table.frame_to_phoneme[f] = table.frame_to_word[f] = kSilence;
      continue;
    }
    if (w == kSilence)
      throw Error(ErrorKind::DegenerateAlignment,
                  "phone '" + table.phonemes[p] + "' lies outside every word");
    if (table.phoneme_to_word[p] == kSilence) table.phoneme_to_word[p] = w;
    if (table.phoneme_to_word[p] != w)
      throw Error(ErrorKind::DegenerateAlignment,
                  "phone '" + table.phonemes[p] + "' straddles a word boundary");
    table.frame_to_phoneme[f] = p;
    table.frame_to_word[f] = w;
  }
  table.finalize();
  return table;
}

/// Frames covering words first..last inclusive, including silence between
/// them but not silence before the first or after the last.
inline FrameRange word_span_frames(const AlignmentTable& table, std::size_t first_word,
                                   std::size_t last_word) {
  if (first_word > last_word || last_word >= table.word_count())
    throw Error(ErrorKind::IndexError, "word range [" + std::to_string(first_word) + ", " +
                                           std::to_string(last_word) + "] invalid for " +
                                           std::to_string(table.word_count()) + " words");
  return {table.word_ranges[first_word].begin, table.word_ranges[last_word].end};
}

}  // namespace fluentcrit
