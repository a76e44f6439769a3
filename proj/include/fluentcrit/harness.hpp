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
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fluentcrit/alignment.hpp"
#include "fluentcrit/criteria.hpp"
#include "fluentcrit/error.hpp"
#include "fluentcrit/masking.hpp"
#include "fluentcrit/random.hpp"
#include "fluentcrit/spectral.hpp"
#include "fluentcrit/textgrid.hpp"

namespace fluentcrit {

/// Orthonormal DCT-II of one log-mel frame.
inline std::vector<double> dct2_orthonormal(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));
    c[k] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
  }
  return c;
}

/// Frame-aligned mel-cepstral distortion in dB over coefficients 1..n_ceps
/// (c0 excluded), averaged over frames. No time warping.
inline double mcd(const MelSpectrogram& pred, const MelSpectrogram& gt, std::size_t n_ceps = 13) {
  detail::check_same_shape(pred, gt);
  if (n_ceps == 0 || n_ceps >= gt.n_mels())
    throw Error(ErrorKind::InvalidArgument, "n_ceps must satisfy 0 < n_ceps < n_mels");
  if (gt.n_frames() == 0) throw Error(ErrorKind::EmptyInput, "MCD of zero frames");
  const double scale = 10.0 / std::numbers::ln10 * std::numbers::sqrt2;
  double acc = 0.0;
  for (std::size_t f = 0; f < gt.n_frames(); ++f) {
    const auto cp = dct2_orthonormal(pred.frame(f));
    const auto cg = dct2_orthonormal(gt.frame(f));
    double sq = 0.0;
    for (std::size_t d = 1; d <= n_ceps; ++d) sq += (cp[d] - cg[d]) * (cp[d] - cg[d]);
    acc += scale * std::sqrt(sq);
  }
  return acc / static_cast<double>(gt.n_frames());
}

inline constexpr double kDiscontinuityFloor = 1e-9;

/// Mean L2 jump across the given boundaries divided by the mean L2 jump
/// between all other adjacent frames. Boundaries without frames b-1 and b
/// are ignored; 1.0 means the boundary looks like ordinary context.
inline double boundary_discontinuity(const MelSpectrogram& mel, std::span<const std::size_t> boundaries) {
  std::vector<bool> is_boundary(mel.n_frames(), false);
  std::size_t valid = 0;
  for (std::size_t b : boundaries) {
    if (b == 0 || b >= mel.n_frames() || is_boundary[b]) continue;
    is_boundary[b] = true;
    ++valid;
  }
  if (valid == 0) throw Error(ErrorKind::EmptyInput, "no boundary has frames on both sides");
  auto jump = [&](std::size_t b) {
    const auto x = mel.frame(b - 1);
    const auto y = mel.frame(b);
    double acc = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) acc += (y[d] - x[d]) * (y[d] - x[d]);
    return std::sqrt(acc);
  };
  double num = 0.0, den = 0.0;
  std::size_t others = 0;
  for (std::size_t b = 1; b < mel.n_frames(); ++b) {
    if (is_boundary[b]) {
      num += jump(b);
    } else {
      den += jump(b);
      ++others;
    }
  }
  num /= static_cast<double>(valid);
  if (num == 0.0) return 0.0;
  if (others > 0) den /= static_cast<double>(others);
  return num / std::max(den, kDiscontinuityFloor);
}

/// Edges of a mask span that have frames on both sides.
inline std::vector<std::size_t> span_boundaries(const FrameRange& span, std::size_t n_frames) {
  std::vector<std::size_t> out;
  for (std::size_t b : {span.begin, span.end})
    if (b > 0 && b < n_frames && (out.empty() || out.back() != b)) out.push_back(b);
  return out;
}

struct ToyTrainConfig {
  LossWeights weights;
  double tau = kDefaultTemperature;
  std::size_t steps = 500;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_halvings = 60;
};

struct ToyRunResult {
  std::vector<double> trajectory;  // steps + 1 entries, first is the initial loss
  LossBreakdown final_loss;
  std::optional<double> final_boundary_discontinuity;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  double learning_rate = 0.0;  // as configured
  double final_learning_rate = 0.0;
  MelSpectrogram final_pred;
};

/// Seeded i.i.d. normal spectrogram of the given shape, used as the other
/// batch item that supplies contrastive negatives.
inline MelSpectrogram surrogate_utterance(const MelConfig& cfg, std::size_t n_frames,
                                          std::uint64_t seed) {
  MelSpectrogram out(cfg, n_frames);
  SeededRng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  for (double& v : out.data()) v = rng.normal();
  return out;
}

/// Gradient descent on total_loss where only the masked span of the
/// prediction is free. The span starts from the random mask filler. A step
/// that would raise the loss halves the learning rate (persistently) and is
/// retried, so the recorded trajectory never increases.
inline ToyRunResult toy_train(const MelSpectrogram& gt, const AlignmentTable& table,
                              const MaskSpec& spec, const ToyTrainConfig& cfg) {
  if (cfg.steps == 0) throw Error(ErrorKind::InvalidArgument, "steps must be at least 1");
  if (!(cfg.lr > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
  if (spec.span.empty() || spec.span.end > gt.n_frames())
    throw Error(ErrorKind::IndexError, "mask span invalid for ground truth");

  const auto surrogate = surrogate_utterance(gt.config(), gt.n_frames(), cfg.seed);
  BatchContext batch;
  batch.masked_region_embeds.push_back(prosody_extract_standin(surrogate, spec.span));
  batch.utterance_embeds.push_back(prosody_extract_standin(surrogate));

  auto evaluate = [&](const MelSpectrogram& p) {
    return total_loss(p, gt, table, spec, batch, cfg.weights, cfg.tau);
  };

  ToyRunResult run;
  run.seed = cfg.seed;
  run.steps = cfg.steps;
  run.learning_rate = cfg.lr;
  MelSpectrogram pred = apply_mask(gt, spec, cfg.seed);
  double loss = evaluate(pred).total;
  run.trajectory.reserve(cfg.steps + 1);
  run.trajectory.push_back(loss);
  double lr = cfg.lr;
  MelSpectrogram candidate = pred;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto grad = loss_gradient(pred, gt, table, spec, batch, cfg.weights, cfg.tau);
    for (std::size_t attempt = 0; attempt <= cfg.max_halvings; ++attempt) {
      for (std::size_t f = spec.span.begin; f < spec.span.end; ++f)
        for (std::size_t d = 0; d < gt.n_mels(); ++d)
          candidate.at(f, d) = pred.at(f, d) - lr * grad.at(f, d);
      const double next = evaluate(candidate).total;
      if (next <= loss) {
        std::swap(pred, candidate);
        loss = next;
        break;
      }
      lr *= 0.5;
    }
    run.trajectory.push_back(loss);
  }
  run.final_loss = evaluate(pred);
  run.final_learning_rate = lr;
  const auto bounds = span_boundaries(spec.span, gt.n_frames());
  if (!bounds.empty()) run.final_boundary_discontinuity = boundary_discontinuity(pred, bounds);
  run.final_pred = std::move(pred);
  return run;
}

struct SyntheticUtterance {
  TextGridDoc textgrid;
  MelSpectrogram mel;
  AlignmentTable alignment;
};

/// A smooth synthetic utterance: every bin is a slow ramp plus a low
/// frequency sinusoid, segmented into n_words words of 2-3 phones each with
/// leading and trailing silence. The alignment goes through the TextGrid
/// path, so unit boundaries sit exactly on frame starts.
inline SyntheticUtterance synthetic_utterance(std::size_t n_words, std::size_t n_mels,
                                              std::uint64_t seed) {
  SeededRng rng(seed);
  MelConfig cfg;
  cfg.n_mels = static_cast<std::uint32_t>(n_mels);
  const double frame_sec = static_cast<double>(cfg.hop_size) / cfg.sample_rate_hz;

  IntervalTier phones{"phones", 0.0, 0.0, {}};
  IntervalTier words{"words", 0.0, 0.0, {}};
  std::size_t frame = 0;
  auto t = [&](std::size_t f) { return static_cast<double>(f) * frame_sec; };
  auto add_silence = [&](std::size_t len) {
    phones.intervals.push_back({t(frame), t(frame + len), "sil"});
    words.intervals.push_back({t(frame), t(frame + len), ""});
    frame += len;
  };
  add_silence(3 + rng.index(3));
  for (std::size_t w = 0; w < n_words; ++w) {
    const std::size_t start = frame;
    const std::size_t n_ph = 2 + rng.index(2);
    for (std::size_t p = 0; p < n_ph; ++p) {
      const std::size_t len = 2 + rng.index(3);
      phones.intervals.push_back({t(frame), t(frame + len), "p" + std::to_string(p)});
      frame += len;
    }
    words.intervals.push_back({t(start), t(frame), "w" + std::to_string(w)});
    if (w + 1 < n_words && rng.index(4) == 0) add_silence(1 + rng.index(2));
  }
  add_silence(3 + rng.index(3));

  // Doc end lands mid-way through the last frame so the frame count derived
  // from the duration equals `frame`.
  const double end = t(frame) - 0.5 * frame_sec;
  phones.intervals.back().xmax = words.intervals.back().xmax = end;
  phones.xmax = words.xmax = end;
  TextGridDoc doc{0.0, end, {phones, words}};
  const std::size_t n_frames = frames_for_duration(end, cfg);

  MelSpectrogram mel(cfg, n_frames);
  for (std::size_t d = 0; d < n_mels; ++d) {
    const double base = -4.0 + 3.0 * rng.uniform();
    const double slope = (rng.uniform() - 0.5) * 0.1;
    const double amp = 0.5 * rng.uniform();
    const double period = 20.0 + 40.0 * rng.uniform();
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    for (std::size_t f = 0; f < n_frames; ++f)
      mel.at(f, d) = base + slope * static_cast<double>(f) +
                     amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(f) / period + phase);
  }
  auto table = build_alignment(doc, n_frames, cfg);
  return {std::move(doc), std::move(mel), std::move(table)};
}

}  // namespace fluentcrit
