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

// Word-level masking: the training mask always covers whole consecutive
// words, never a fraction of one.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fluentcrit/alignment.hpp"
#include "fluentcrit/error.hpp"
#include "fluentcrit/random.hpp"
#include "fluentcrit/spectral.hpp"

namespace fluentcrit {

struct MaskSpec {
  FrameRange span;
  std::size_t first_word = 0;
  std::size_t last_word = 0;
  double ratio_target = 0.8;  // lambda
  std::uint64_t seed = 0;

  friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

/// Runs whose length is within this of the best distance count as ties.
inline constexpr double kMaskTieTolerance = 1e-9;

/// Picks one contiguous run of words whose frame span is closest to
/// lambda * voiced frames, breaking ties uniformly with a generator seeded
/// by `seed`.
inline MaskSpec select_word_mask(const AlignmentTable& table, double lambda, std::uint64_t seed) {
  if (table.word_count() == 0) throw Error(ErrorKind::NoWords, "alignment has no words");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "lambda must lie in (0, 1]");
  const double target = lambda * static_cast<double>(table.voiced_frames());
  const std::size_t n = table.word_count();

  double best = INFINITY;
  std::vector<std::pair<std::size_t, std::size_t>> ties;
  for (std::size_t first = 0; first < n; ++first) {
    for (std::size_t last = first; last < n; ++last) {
      const auto span = word_span_frames(table, first, last);
      const double dist = std::fabs(static_cast<double>(span.size()) - target);
      if (dist < best - kMaskTieTolerance) {
        best = dist;
        ties.clear();
      }
      if (dist <= best + kMaskTieTolerance) ties.emplace_back(first, last);
    }
  }
  SeededRng rng(seed);
  const auto [first, last] = ties[rng.index(ties.size())];
  return {word_span_frames(table, first, last), first, last, lambda, seed};
}

/// Replaces the span's frames with i.i.d. standard normal draws; every other
/// frame is copied unchanged.
inline MelSpectrogram apply_mask(const MelSpectrogram& mel, const MaskSpec& spec,
                                 std::uint64_t seed) {
  if (spec.span.begin > spec.span.end || spec.span.end > mel.n_frames())
    throw Error(ErrorKind::IndexError, "mask span exceeds spectrogram bounds");
  MelSpectrogram out = mel;
  SeededRng rng(seed);
  for (std::size_t f = spec.span.begin; f < spec.span.end; ++f)
    for (double& v : out.frame(f)) v = rng.normal();
  return out;
}

}  // namespace fluentcrit
