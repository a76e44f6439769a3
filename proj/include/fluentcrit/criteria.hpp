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

// Fluency-aware training criteria evaluated on log-mel spectrograms:
//
//  * HLAC, a boundary-smoothness loss. At frame, phoneme and word
//    granularity it compares |theta(inside unit) - theta(outside unit)| at the
//    left and right edges of the masked span between prediction and ground
//    truth, where theta is the per-bin mean over a unit's frames.
//  * CGPC, an InfoNCE-style loss that pulls the prosody embedding of the
//    predicted masked region towards its own utterance and away from the
//    other utterances in the batch.
//  * MAE and SSIM reconstruction losses over the masked span.
//
// loss_gradient() differentiates the weighted total analytically with
// respect to the prediction inside the masked span; finite_diff_oracle()
// provides the central-difference reference used to check it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fluentcrit/alignment.hpp"
#include "fluentcrit/error.hpp"
#include "fluentcrit/masking.hpp"
#include "fluentcrit/spectral.hpp"

namespace fluentcrit {

enum class Side { Left, Right };
enum class Level { Frame, Phoneme, Word };

inline std::string_view to_string(Level level) {
  switch (level) {
    case Level::Frame: return "frame";
    case Level::Phoneme: return "phoneme";
    case Level::Word: return "word";
  }
  return "?";
}

inline constexpr Level kAllLevels[] = {Level::Frame, Level::Phoneme, Level::Word};

struct BoundaryDelta {
  Side side = Side::Left;
  Level level = Level::Frame;
  std::vector<double> delta;  // per mel bin, >= 0
};

struct LossWeights {
  double alpha_hlac = 1.0;
  double beta_cgpc = 1.0;
  double gamma_rec = 1.0;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

inline constexpr double kDefaultTemperature = 0.1;

struct LossBreakdown {
  double hlac_frame_L = 0.0;
  double hlac_frame_R = 0.0;
  double hlac_phoneme_L = 0.0;
  double hlac_phoneme_R = 0.0;
  double hlac_word_L = 0.0;
  double hlac_word_R = 0.0;
  double hlac_total = 0.0;
  double cgpc = 0.0;
  double mae = 0.0;
  double ssim_loss = 0.0;
  double total = 0.0;
  LossWeights weights;

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

enum class ProsodySource { StandIn, External };

struct ProsodyEmbedding {
  std::vector<double> vector;
  ProsodySource source = ProsodySource::StandIn;

  std::size_t dim() const noexcept { return vector.size(); }
};

/// Wraps an externally computed embedding (e.g. a GST vector).
inline ProsodyEmbedding external_embedding(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorKind::InvalidArgument, "embedding must have dim > 0");
  double norm2 = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "non-finite embedding entry");
    norm2 += x * x;
  }
  if (norm2 == 0.0) throw Error(ErrorKind::ZeroVector, "embedding has zero norm");
  return {std::move(v), ProsodySource::External};
}

/// Span-restricted gradient: values[(f - span.begin) * n_mels + bin].
struct Gradient {
  FrameRange span;
  std::size_t n_mels = 0;
  std::vector<double> values;

  Gradient() = default;
  Gradient(FrameRange s, std::size_t mels) : span(s), n_mels(mels), values(s.size() * mels, 0.0) {}

  double& at(std::size_t frame, std::size_t bin) {
    return values[(frame - span.begin) * n_mels + bin];
  }
  double at(std::size_t frame, std::size_t bin) const {
    return values[(frame - span.begin) * n_mels + bin];
  }
};

namespace detail {

struct BoundaryUnits {
  FrameRange inside;
  FrameRange outside;
};

inline void check_span(const MelSpectrogram& mel, const FrameRange& span) {
  if (span.begin > span.end || span.end > mel.n_frames())
    throw Error(ErrorKind::IndexError, "span exceeds spectrogram bounds");
}

inline void check_same_shape(const MelSpectrogram& a, const MelSpectrogram& b) {
  if (!a.same_shape(b))
    throw Error(ErrorKind::ShapeError,
                "shape mismatch: " + std::to_string(a.n_frames()) + "x" + std::to_string(a.n_mels()) +
                    " vs " + std::to_string(b.n_frames()) + "x" + std::to_string(b.n_mels()));
}

inline const std::vector<FrameRange>& unit_ranges(const AlignmentTable& table, Level level) {
  return level == Level::Phoneme ? table.phoneme_ranges : table.word_ranges;
}

/// The unit just inside and the unit just outside the span edge on `side`.
/// Units at phoneme and word level must lie wholly on one side of the edge.
inline BoundaryUnits boundary_units(const AlignmentTable& table, const FrameRange& span,
                                    Level level, Side side) {
  const std::size_t n = table.n_frames;
  if (span.end > n || span.begin > span.end)
    throw Error(ErrorKind::IndexError, "span exceeds alignment bounds");
  auto missing = [&]() {
    return Error(ErrorKind::MissingNeighbor,
                 std::string(to_string(level)) + " boundary on the " +
                     (side == Side::Left ? "left" : "right") + " has no neighbour");
  };
  auto empty = [&]() {
    return Error(ErrorKind::EmptyRegion,
                 "masked span contains no whole " + std::string(to_string(level)) + " unit");
  };
  if (level == Level::Frame) {
    if (span.empty()) throw empty();
    if (side == Side::Left) {
      if (span.begin == 0) throw missing();
      return {{span.begin, span.begin + 1}, {span.begin - 1, span.begin}};
    }
    if (span.end == n) throw missing();
    return {{span.end - 1, span.end}, {span.end, span.end + 1}};
  }

  const auto& units = unit_ranges(table, level);
  std::optional<FrameRange> inside, outside;
  if (side == Side::Left) {
    for (const auto& u : units) {
      if (u.end <= span.begin) outside = u;
      if (!inside && span.covers(u)) inside = u;
    }
  } else {
    for (const auto& u : units) {
      if (span.covers(u)) inside = u;
      if (!outside && u.begin >= span.end) outside = u;
    }
  }
  if (!inside) throw empty();
  if (!outside) throw missing();
  return {*inside, *outside};
}

inline void unit_mean(const MelSpectrogram& mel, const FrameRange& unit, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t f = unit.begin; f < unit.end; ++f) {
    const auto row = mel.frame(f);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += row[d];
  }
  const auto count = static_cast<double>(unit.size());
  for (double& v : out) v /= count;
}

/// Signed theta(inside) - theta(outside) per bin.
inline std::vector<double> signed_boundary_diff(const MelSpectrogram& mel, const BoundaryUnits& u) {
  std::vector<double> in(mel.n_mels()), out(mel.n_mels());
  unit_mean(mel, u.inside, in);
  unit_mean(mel, u.outside, out);
  for (std::size_t d = 0; d < in.size(); ++d) in[d] -= out[d];
  return in;
}

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

inline BoundaryDelta boundary_delta(const MelSpectrogram& mel, const AlignmentTable& table,
                                    const MaskSpec& spec, Level level, Side side) {
  if (table.n_frames != mel.n_frames())
    throw Error(ErrorKind::ShapeError, "alignment and spectrogram frame counts differ");
  const auto units = detail::boundary_units(table, spec.span, level, side);
  auto diff = detail::signed_boundary_diff(mel, units);
  for (double& v : diff) v = std::fabs(v);
  return {side, level, std::move(diff)};
}

/// MSE between prediction and ground-truth boundary deltas for one level
/// and side, averaged over bins. A side without a neighbour contributes 0.
inline double hlac_side_loss(const MelSpectrogram& pred, const MelSpectrogram& gt,
                             const AlignmentTable& table, const MaskSpec& spec, Level level,
                             Side side) {
  detail::check_same_shape(pred, gt);
  try {
    const auto dp = boundary_delta(pred, table, spec, level, side);
    const auto dg = boundary_delta(gt, table, spec, level, side);
    double acc = 0.0;
    for (std::size_t d = 0; d < dp.delta.size(); ++d) {
      const double e = dp.delta[d] - dg.delta[d];
      acc += e * e;
    }
    return acc / static_cast<double>(dp.delta.size());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MissingNeighbor) return 0.0;
    throw;
  }
}

inline double hlac_level_loss(const MelSpectrogram& pred, const MelSpectrogram& gt,
                              const AlignmentTable& table, const MaskSpec& spec, Level level) {
  return hlac_side_loss(pred, gt, table, spec, level, Side::Left) +
         hlac_side_loss(pred, gt, table, spec, level, Side::Right);
}

/// Sum of the three level losses. Fills the six HLAC components and
/// hlac_total of the returned breakdown; other fields stay zero.
inline LossBreakdown hlac_loss(const MelSpectrogram& pred, const MelSpectrogram& gt,
                               const AlignmentTable& table, const MaskSpec& spec) {
  LossBreakdown b;
  auto side = [&](Level l, Side s) { return hlac_side_loss(pred, gt, table, spec, l, s); };
  b.hlac_frame_L = side(Level::Frame, Side::Left);
  b.hlac_frame_R = side(Level::Frame, Side::Right);
  b.hlac_phoneme_L = side(Level::Phoneme, Side::Left);
  b.hlac_phoneme_R = side(Level::Phoneme, Side::Right);
  b.hlac_word_L = side(Level::Word, Side::Left);
  b.hlac_word_R = side(Level::Word, Side::Right);
  b.hlac_total = b.hlac_frame_L + b.hlac_frame_R + b.hlac_phoneme_L + b.hlac_phoneme_R +
                 b.hlac_word_L + b.hlac_word_R;
  return b;
}

namespace detail {

inline FrameRange region_or_all(const MelSpectrogram& mel, const std::optional<FrameRange>& span) {
  const FrameRange region = span.value_or(FrameRange{0, mel.n_frames()});
  check_span(mel, region);
  if (region.empty()) throw Error(ErrorKind::EmptyRegion, "prosody region has no frames");
  return region;
}

/// Per-bin mean followed by per-bin population standard deviation.
inline std::vector<double> standin_raw(const MelSpectrogram& mel, const FrameRange& region) {
  const std::size_t bins = mel.n_mels();
  std::vector<double> v(2 * bins, 0.0);
  unit_mean(mel, region, std::span<double>(v.data(), bins));
  for (std::size_t f = region.begin; f < region.end; ++f) {
    const auto row = mel.frame(f);
    for (std::size_t d = 0; d < bins; ++d) {
      const double c = row[d] - v[d];
      v[bins + d] += c * c;
    }
  }
  for (std::size_t d = 0; d < bins; ++d)
    v[bins + d] = std::sqrt(v[bins + d] / static_cast<double>(region.size()));
  return v;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorKind::ShapeError, "embedding dimensions differ");
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

}  // namespace detail

/// Deterministic stand-in for a learned prosody encoder: per-bin mean and
/// standard deviation over the region, L2-normalized (dim = 2 * n_mels).
/// An all-zero statistics vector maps to e_1.
inline ProsodyEmbedding prosody_extract_standin(const MelSpectrogram& mel,
                                                const std::optional<FrameRange>& span = std::nullopt) {
  const auto region = detail::region_or_all(mel, span);
  auto v = detail::standin_raw(mel, region);
  const double norm = std::sqrt(detail::dot(v, v));
  if (norm == 0.0) {
    v[0] = 1.0;
  } else {
    for (double& x : v) x /= norm;
  }
  return {std::move(v), ProsodySource::StandIn};
}

inline double cosine_sim(const ProsodyEmbedding& a, const ProsodyEmbedding& b) {
  return detail::cosine(a.vector, b.vector);
}

namespace detail {

inline void check_batch(std::size_t masked, std::size_t utterance, double tau) {
  if (masked != utterance)
    throw Error(ErrorKind::ShapeError, "masked and utterance embedding lists differ in length");
  if (masked < 2) throw Error(ErrorKind::BatchTooSmall, "contrastive loss needs a batch of at least 2");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw Error(ErrorKind::BadTemperature, "temperature must be positive");
}

/// -log softmax_i of row i of sims / tau, max-subtracted.
inline double infonce_row(std::span<const double> sims, std::size_t positive, double tau) {
  double peak = -INFINITY;
  for (double s : sims) peak = std::max(peak, s / tau);
  double denom = 0.0;
  for (double s : sims) denom += std::exp(s / tau - peak);
  return peak + std::log(denom) - sims[positive] / tau;
}

}  // namespace detail

/// Contrastive prosody loss summed over the batch. Row i uses masked_i as
/// the anchor, utterance_i as the positive and every utterance_k (k != i)
/// as a negative. Rows are summed in index order.
inline double cgpc_loss(std::span<const ProsodyEmbedding> masked_region_embeds,
                        std::span<const ProsodyEmbedding> utterance_embeds, double tau) {
  detail::check_batch(masked_region_embeds.size(), utterance_embeds.size(), tau);
  const std::size_t b = masked_region_embeds.size();
  std::vector<double> sims(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t k = 0; k < b; ++k)
      sims[k] = cosine_sim(masked_region_embeds[i], utterance_embeds[k]);
    total += detail::infonce_row(sims, i, tau);
  }
  return total;
}

/// Other utterances in the batch. The utterance being scored is item 0 and
/// its embeddings are computed from pred and gt with the stand-in extractor.
struct BatchContext {
  std::vector<ProsodyEmbedding> masked_region_embeds;
  std::vector<ProsodyEmbedding> utterance_embeds;

  std::size_t size() const noexcept { return masked_region_embeds.size(); }
};

inline double mae_loss(const MelSpectrogram& pred, const MelSpectrogram& gt, const FrameRange& span) {
  detail::check_same_shape(pred, gt);
  detail::check_span(gt, span);
  if (span.empty()) throw Error(ErrorKind::EmptyRegion, "MAE over an empty span");
  double acc = 0.0;
  for (std::size_t f = span.begin; f < span.end; ++f) {
    const auto p = pred.frame(f);
    const auto g = gt.frame(f);
    for (std::size_t d = 0; d < p.size(); ++d) acc += std::fabs(p[d] - g[d]);
  }
  return acc / static_cast<double>(span.size() * gt.n_mels());
}

struct SsimParams {
  std::size_t window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  double min_range = 1e-6;
};

namespace detail {

struct SsimLayout {
  std::size_t rows, cols;  // span frames, mel bins
  std::size_t win_rows, win_cols;
  double c1, c2;
};

inline SsimLayout ssim_layout(const MelSpectrogram& gt, const FrameRange& span, const SsimParams& p) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t f = span.begin; f < span.end; ++f)
    for (double v : gt.frame(f)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double range = std::max(hi - lo, p.min_range);
  SsimLayout l{span.size(), gt.n_mels(), std::min(p.window, span.size()),
               std::min(p.window, gt.n_mels()), (p.k1 * range) * (p.k1 * range),
               (p.k2 * range) * (p.k2 * range)};
  return l;
}

struct WindowStats {
  double mx, my, vx, vy, cxy;
};

inline WindowStats window_stats(const MelSpectrogram& x, const MelSpectrogram& y, std::size_t r0,
                                std::size_t c0, std::size_t wr, std::size_t wc) {
  const double n = static_cast<double>(wr * wc);
  WindowStats s{0, 0, 0, 0, 0};
  for (std::size_t r = r0; r < r0 + wr; ++r)
    for (std::size_t c = c0; c < c0 + wc; ++c) {
      s.mx += x.at(r, c);
      s.my += y.at(r, c);
    }
  s.mx /= n;
  s.my /= n;
  for (std::size_t r = r0; r < r0 + wr; ++r)
    for (std::size_t c = c0; c < c0 + wc; ++c) {
      const double dx = x.at(r, c) - s.mx;
      const double dy = y.at(r, c) - s.my;
      s.vx += dx * dx;
      s.vy += dy * dy;
      s.cxy += dx * dy;
    }
  s.vx /= n;
  s.vy /= n;
  s.cxy /= n;
  return s;
}

/// Mean SSIM over all valid windows; optionally accumulates d(mean SSIM)/d pred.
inline double ssim_impl(const MelSpectrogram& pred, const MelSpectrogram& gt, const FrameRange& span,
                        const SsimParams& params, Gradient* grad) {
  check_same_shape(pred, gt);
  check_span(gt, span);
  if (span.empty()) throw Error(ErrorKind::EmptyRegion, "SSIM over an empty span");
  const auto l = ssim_layout(gt, span, params);
  const std::size_t n_r = l.rows - l.win_rows + 1;
  const std::size_t n_c = l.cols - l.win_cols + 1;
  const double n_windows = static_cast<double>(n_r * n_c);
  const double n_px = static_cast<double>(l.win_rows * l.win_cols);
  double acc = 0.0;
  for (std::size_t r = 0; r < n_r; ++r) {
    for (std::size_t c = 0; c < n_c; ++c) {
      const auto s = window_stats(pred, gt, span.begin + r, c, l.win_rows, l.win_cols);
      const double a1 = 2.0 * s.mx * s.my + l.c1;
      const double a2 = 2.0 * s.cxy + l.c2;
      const double b1 = s.mx * s.mx + s.my * s.my + l.c1;
      const double b2 = s.vx + s.vy + l.c2;
      const double value = (a1 * a2) / (b1 * b2);
      acc += value;
      if (grad == nullptr) continue;
      const double scale = 2.0 / (n_px * n_windows);
      for (std::size_t rr = span.begin + r; rr < span.begin + r + l.win_rows; ++rr)
        for (std::size_t cc = c; cc < c + l.win_cols; ++cc) {
          const double xk = pred.at(rr, cc) - s.mx;
          const double yk = gt.at(rr, cc) - s.my;
          const double d = (s.my * a2 + a1 * yk) / (b1 * b2) - value * (s.mx / b1 + xk / b2);
          grad->at(rr, cc) += scale * d;
        }
    }
  }
  return acc / n_windows;
}

}  // namespace detail

/// 1 - mean SSIM of the span viewed as a frames x bins image. Windows are
/// uniform and at most 7x7 (smaller when the span is), placed at every valid
/// position; the dynamic range comes from the ground-truth span.
inline double ssim_loss(const MelSpectrogram& pred, const MelSpectrogram& gt, const FrameRange& span,
                        const SsimParams& params = {}) {
  return 1.0 - detail::ssim_impl(pred, gt, span, params, nullptr);
}

namespace detail {

inline void check_batch_context(const BatchContext& batch, std::size_t dim) {
  if (batch.masked_region_embeds.size() != batch.utterance_embeds.size())
    throw Error(ErrorKind::ShapeError, "batch context lists differ in length");
  for (const auto* list : {&batch.masked_region_embeds, &batch.utterance_embeds})
    for (const auto& e : *list)
      if (e.dim() != dim)
        throw Error(ErrorKind::ShapeError, "batch embedding has dim " + std::to_string(e.dim()) +
                                               ", expected " + std::to_string(dim));
}

inline bool cgpc_active(const LossWeights& w, const BatchContext& batch) {
  return w.beta_cgpc != 0.0 || batch.size() > 0;
}

inline double batch_cgpc(const MelSpectrogram& pred, const MelSpectrogram& gt,
                         const FrameRange& span, const BatchContext& batch, double tau) {
  std::vector<ProsodyEmbedding> masked{prosody_extract_standin(pred, span)};
  std::vector<ProsodyEmbedding> utter{prosody_extract_standin(gt)};
  check_batch_context(batch, masked[0].dim());
  masked.insert(masked.end(), batch.masked_region_embeds.begin(), batch.masked_region_embeds.end());
  utter.insert(utter.end(), batch.utterance_embeds.begin(), batch.utterance_embeds.end());
  return cgpc_loss(masked, utter, tau);
}

}  // namespace detail

/// total = gamma * (MAE + SSIM loss) + alpha * HLAC + beta * CGPC.
/// CGPC is skipped (reported as 0) only when beta is 0 and the batch
/// context is empty; otherwise a batch of at least two is required.
inline LossBreakdown total_loss(const MelSpectrogram& pred, const MelSpectrogram& gt,
                                const AlignmentTable& table, const MaskSpec& spec,
                                const BatchContext& batch, const LossWeights& weights = {},
                                double tau = kDefaultTemperature) {
  LossBreakdown b = hlac_loss(pred, gt, table, spec);
  b.weights = weights;
  b.mae = mae_loss(pred, gt, spec.span);
  b.ssim_loss = ssim_loss(pred, gt, spec.span);
  if (detail::cgpc_active(weights, batch))
    b.cgpc = detail::batch_cgpc(pred, gt, spec.span, batch, tau);
  b.total = weights.gamma_rec * (b.mae + b.ssim_loss) + weights.alpha_hlac * b.hlac_total +
            weights.beta_cgpc * b.cgpc;
  return b;
}

/// Analytic d(total_loss)/d(pred) over the masked span. |.| uses the
/// subgradient sign(.) with sign(0) = 0.
inline Gradient loss_gradient(const MelSpectrogram& pred, const MelSpectrogram& gt,
                              const AlignmentTable& table, const MaskSpec& spec,
                              const BatchContext& batch, const LossWeights& weights = {},
                              double tau = kDefaultTemperature) {
  detail::check_same_shape(pred, gt);
  detail::check_span(gt, spec.span);
  if (table.n_frames != pred.n_frames())
    throw Error(ErrorKind::ShapeError, "alignment and spectrogram frame counts differ");
  const FrameRange span = spec.span;
  const std::size_t bins = pred.n_mels();
  Gradient grad(span, bins);

  if (weights.gamma_rec != 0.0) {
    if (span.empty()) throw Error(ErrorKind::EmptyRegion, "gradient over an empty span");
    const double scale = weights.gamma_rec / static_cast<double>(span.size() * bins);
    for (std::size_t f = span.begin; f < span.end; ++f)
      for (std::size_t d = 0; d < bins; ++d)
        grad.at(f, d) += scale * detail::sign(pred.at(f, d) - gt.at(f, d));
    Gradient ssim_grad(span, bins);
    detail::ssim_impl(pred, gt, span, {}, &ssim_grad);
    for (std::size_t i = 0; i < grad.values.size(); ++i)
      grad.values[i] -= weights.gamma_rec * ssim_grad.values[i];
  }

  if (weights.alpha_hlac != 0.0) {
    for (Level level : kAllLevels) {
      for (Side side : {Side::Left, Side::Right}) {
        detail::BoundaryUnits units;
        try {
          units = detail::boundary_units(table, span, level, side);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::MissingNeighbor) continue;
          throw;
        }
        const auto dp = detail::signed_boundary_diff(pred, units);
        const auto dg = detail::signed_boundary_diff(gt, units);
        const double unit_size = static_cast<double>(units.inside.size());
        for (std::size_t d = 0; d < bins; ++d) {
          const double g = weights.alpha_hlac * 2.0 / static_cast<double>(bins) *
                           (std::fabs(dp[d]) - std::fabs(dg[d])) * detail::sign(dp[d]) / unit_size;
          for (std::size_t f = units.inside.begin; f < units.inside.end; ++f) grad.at(f, d) += g;
        }
      }
    }
  }

  if (detail::cgpc_active(weights, batch) && weights.beta_cgpc != 0.0) {
    if (!(tau > 0.0)) throw Error(ErrorKind::BadTemperature, "temperature must be positive");
    if (batch.size() < 1)
      throw Error(ErrorKind::BatchTooSmall, "contrastive loss needs a batch of at least 2");
    const auto raw = detail::standin_raw(pred, span);
    const auto anchor = prosody_extract_standin(pred, span);
    const auto own = prosody_extract_standin(gt);
    detail::check_batch_context(batch, anchor.dim());
    // Only row 0 of the batch depends on pred.
    std::vector<const ProsodyEmbedding*> utter{&own};
    for (const auto& e : batch.utterance_embeds) utter.push_back(&e);
    std::vector<double> sims(utter.size());
    double peak = -INFINITY;
    for (std::size_t k = 0; k < utter.size(); ++k) {
      sims[k] = cosine_sim(anchor, *utter[k]);
      peak = std::max(peak, sims[k] / tau);
    }
    std::vector<double> prob(utter.size());
    double denom = 0.0;
    for (std::size_t k = 0; k < utter.size(); ++k) denom += prob[k] = std::exp(sims[k] / tau - peak);
    const double raw_norm = std::sqrt(detail::dot(raw, raw));
    if (raw_norm > 0.0) {
      // d row0 / d raw, through cosine (scale-invariant in raw).
      std::vector<double> d_raw(raw.size(), 0.0);
      for (std::size_t k = 0; k < utter.size(); ++k) {
        const double coeff = (prob[k] / denom - (k == 0 ? 1.0 : 0.0)) / tau;
        const auto& u = utter[k]->vector;
        const double u_norm = std::sqrt(detail::dot(u, u));
        for (std::size_t j = 0; j < raw.size(); ++j)
          d_raw[j] += coeff * (u[j] / (raw_norm * u_norm) - sims[k] * raw[j] / (raw_norm * raw_norm));
      }
      const double t = static_cast<double>(span.size());
      for (std::size_t f = span.begin; f < span.end; ++f)
        for (std::size_t d = 0; d < bins; ++d) {
          double g = d_raw[d] / t;
          const double sd = raw[bins + d];
          if (sd > 0.0) g += d_raw[bins + d] * (pred.at(f, d) - raw[d]) / (t * sd);
          grad.at(f, d) += weights.beta_cgpc * g;
        }
    }
  }
  return grad;
}

/// Central differences (f(x + h e) - f(x - h e)) / 2h for every entry of
/// pred inside span.
inline Gradient finite_diff_oracle(const std::function<double(const MelSpectrogram&)>& f,
                                   const MelSpectrogram& pred, const FrameRange& span, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "step h must be positive");
  detail::check_span(pred, span);
  Gradient grad(span, pred.n_mels());
  MelSpectrogram x = pred;
  for (std::size_t fr = span.begin; fr < span.end; ++fr)
    for (std::size_t d = 0; d < pred.n_mels(); ++d) {
      const double orig = x.at(fr, d);
      x.at(fr, d) = orig + h;
      const double up = f(x);
      x.at(fr, d) = orig - h;
      const double down = f(x);
      x.at(fr, d) = orig;
      grad.at(fr, d) = (up - down) / (2.0 * h);
    }
  return grad;
}

}  // namespace fluentcrit
