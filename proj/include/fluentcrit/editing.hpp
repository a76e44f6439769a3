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
#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fluentcrit/alignment.hpp"
#include "fluentcrit/error.hpp"
#include "fluentcrit/spectral.hpp"

namespace fluentcrit {

enum class EditKind { Insertion, Replacement, Deletion };

inline std::string_view to_string(EditKind kind) {
  switch (kind) {
    case EditKind::Insertion: return "insertion";
    case EditKind::Replacement: return "replacement";
    case EditKind::Deletion: return "deletion";
  }
  return "?";
}

/// One contiguous change. orig_begin/orig_end is a half-open word range in
/// the original text; for an insertion it is empty and anchor (== orig_begin)
/// is the original word the new words go in front of.
struct EditOp {
  EditKind kind = EditKind::Insertion;
  std::size_t orig_begin = 0;
  std::size_t orig_end = 0;
  std::vector<std::string> new_words;

  std::size_t anchor() const noexcept { return orig_begin; }

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct EditPlan {
  std::vector<EditOp> ops;
  std::vector<std::string> orig_words;
  std::vector<std::string> edited_words;

  friend bool operator==(const EditPlan&, const EditPlan&) = default;
};

/// Replays ops over orig; throws PlanMismatch on malformed or overlapping ops.
inline std::vector<std::string> apply_ops(const std::vector<EditOp>& ops,
                                          const std::vector<std::string>& orig) {
  std::vector<std::string> out;
  std::size_t cursor = 0;
  bool prev_insert_here = false;
  for (const auto& op : ops) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::PlanMismatch, msg); };
    if (op.orig_begin > op.orig_end || op.orig_end > orig.size()) fail("op word range out of bounds");
    if (op.orig_begin < cursor) fail("ops overlap or are out of order");
    switch (op.kind) {
      case EditKind::Insertion:
        if (op.orig_begin != op.orig_end || op.new_words.empty())
          fail("insertion needs an empty range and new words");
        if (prev_insert_here && op.orig_begin == cursor) fail("two insertions at one anchor");
        break;
      case EditKind::Replacement:
        if (op.orig_begin == op.orig_end || op.new_words.empty())
          fail("replacement needs a non-empty range and new words");
        break;
      case EditKind::Deletion:
        if (op.orig_begin == op.orig_end || !op.new_words.empty())
          fail("deletion needs a non-empty range and no new words");
        break;
    }
    out.insert(out.end(), orig.begin() + static_cast<std::ptrdiff_t>(cursor),
               orig.begin() + static_cast<std::ptrdiff_t>(op.orig_begin));
    out.insert(out.end(), op.new_words.begin(), op.new_words.end());
    prev_insert_here = op.kind == EditKind::Insertion;
    cursor = op.orig_end;
  }
  out.insert(out.end(), orig.begin() + static_cast<std::ptrdiff_t>(cursor), orig.end());
  return out;
}

inline void validate_plan(const EditPlan& plan) {
  if (apply_ops(plan.ops, plan.orig_words) != plan.edited_words)
    throw Error(ErrorKind::PlanMismatch, "plan ops do not turn orig_words into edited_words");
}

/// Word-level diff from a longest-common-subsequence alignment. Each maximal
/// run of unmatched words becomes one op.
inline EditPlan diff_words(const std::vector<std::string>& orig,
                           const std::vector<std::string>& edited) {
  const std::size_t n = orig.size(), m = edited.size();
  // lcs[i][j] = LCS length of orig[i..] and edited[j..].
  std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      lcs[i][j] = orig[i] == edited[j] ? lcs[i + 1][j + 1] + 1
                                       : std::max(lcs[i + 1][j], lcs[i][j + 1]);

  EditPlan plan{{}, orig, edited};
  std::size_t i = 0, j = 0;
  std::size_t run_begin = 0;
  std::vector<std::string> run_words;
  bool in_run = false;
  auto flush = [&]() {
    if (!in_run) return;
    EditOp op;
    op.orig_begin = run_begin;
    op.orig_end = i;
    op.new_words = std::move(run_words);
    run_words.clear();
    if (op.orig_begin == op.orig_end) op.kind = EditKind::Insertion;
    else if (op.new_words.empty()) op.kind = EditKind::Deletion;
    else op.kind = EditKind::Replacement;
    plan.ops.push_back(std::move(op));
    in_run = false;
  };
  auto open = [&]() {
    if (!in_run) {
      in_run = true;
      run_begin = i;
    }
  };
  while (i < n || j < m) {
    if (i < n && j < m && orig[i] == edited[j] && lcs[i][j] == lcs[i + 1][j + 1] + 1) {
      flush();
      ++i;
      ++j;
    } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
      open();
      ++i;
    } else {
      open();
      run_words.push_back(edited[j]);
      ++j;
    }
  }
  flush();
  return plan;
}

/// Lowercases and splits on whitespace; surrounding punctuation is dropped.
inline std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  auto push = [&]() {
    while (!cur.empty() && std::ispunct(static_cast<unsigned char>(cur.back())) && cur.back() != '\'')
      cur.pop_back();
    std::size_t lead = 0;
    while (lead < cur.size() && std::ispunct(static_cast<unsigned char>(cur[lead])) && cur[lead] != '\'')
      ++lead;
    if (lead < cur.size()) words.push_back(cur.substr(lead));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) push();
    else cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  push();
  return words;
}

/// original[0, start) ++ predicted ++ original[end, n). A missing predicted
/// deletes the region.
inline MelSpectrogram splice(const MelSpectrogram& original, const FrameRange& region,
                             const std::optional<MelSpectrogram>& predicted) {
  if (region.begin > region.end || region.end > original.n_frames())
    throw Error(ErrorKind::IndexError, "splice region exceeds spectrogram bounds");
  if (predicted && !(predicted->config() == original.config()))
    throw Error(ErrorKind::ConfigMismatch, "predicted spectrogram config differs from original");
  const std::size_t inserted = predicted ? predicted->n_frames() : 0;
  const std::size_t bins = original.n_mels();
  std::vector<double> data;
  data.reserve((original.n_frames() - region.size() + inserted) * bins);
  const auto src = original.data();
  data.insert(data.end(), src.begin(), src.begin() + static_cast<std::ptrdiff_t>(region.begin * bins));
  if (predicted) data.insert(data.end(), predicted->data().begin(), predicted->data().end());
  data.insert(data.end(), src.begin() + static_cast<std::ptrdiff_t>(region.end * bins), src.end());
  return {original.config(), original.n_frames() - region.size() + inserted, std::move(data)};
}

/// Fills target_len frames by per-bin linear interpolation between the
/// frame before the region and the frame after it (t = k / (len + 1)),
/// or repeats the only context frame that exists.
inline MelSpectrogram baseline_predict(const MelSpectrogram& original, const FrameRange& region,
                                       std::size_t target_len) {
  if (region.begin > region.end || region.end > original.n_frames())
    throw Error(ErrorKind::IndexError, "region exceeds spectrogram bounds");
  if (target_len == 0) throw Error(ErrorKind::InvalidArgument, "target_len must be at least 1");
  const bool has_left = region.begin > 0;
  const bool has_right = region.end < original.n_frames();
  if (!has_left && !has_right) throw Error(ErrorKind::EmptyContext, "no context frame on either side");
  const auto left = original.frame(has_left ? region.begin - 1 : region.end);
  const auto right = original.frame(has_right ? region.end : region.begin - 1);
  MelSpectrogram out(original.config(), target_len);
  for (std::size_t k = 0; k < target_len; ++k) {
    const double t = static_cast<double>(k + 1) / static_cast<double>(target_len + 1);
    auto row = out.frame(k);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] = left[d] + t * (right[d] - left[d]);
  }
  return out;
}

using Predictor =
    std::function<MelSpectrogram(const MelSpectrogram& context, const FrameRange& region,
                                 std::size_t target_len)>;

struct EditOptions {
  Predictor predictor = baseline_predict;
  // Frames allotted per new word; defaults to the median word duration.
  std::optional<double> frames_per_word;
};

struct AppliedSplice {
  FrameRange region;  // in original frame coordinates
  std::size_t inserted = 0;
};

struct EditResult {
  MelSpectrogram mel;
  std::vector<AppliedSplice> splices;  // left-to-right
};

inline double median_word_duration(const AlignmentTable& table) {
  if (table.word_durations.empty()) throw Error(ErrorKind::NoWords, "alignment has no words");
  std::vector<std::size_t> d = table.word_durations;
  std::sort(d.begin(), d.end());
  const std::size_t mid = d.size() / 2;
  return d.size() % 2 == 1 ? static_cast<double>(d[mid])
                           : (static_cast<double>(d[mid - 1]) + static_cast<double>(d[mid])) / 2.0;
}

namespace detail {

inline std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Applies the plan right to left so earlier frame indices stay valid. Each
/// op's region is the frame span of its original words (insertions use the
/// empty range at the anchor word's first frame, or after the last word).
/// The predictor always sees the unedited original as context.
inline EditResult edit_pipeline_detailed(const MelSpectrogram& original, const AlignmentTable& table,
                                         const EditPlan& plan, const EditOptions& opts = {}) {
  if (table.n_frames != original.n_frames())
    throw Error(ErrorKind::ShapeError, "alignment and spectrogram frame counts differ");
  bool words_match = plan.orig_words.size() == table.words.size();
  for (std::size_t w = 0; words_match && w < table.words.size(); ++w)
    words_match = detail::lowercase(plan.orig_words[w]) == detail::lowercase(table.words[w]);
  if (!words_match)
    throw Error(ErrorKind::PlanMismatch, "plan words do not match the alignment's words");
  validate_plan(plan);

  EditResult result{original, {}};
  for (auto it = plan.ops.rbegin(); it != plan.ops.rend(); ++it) {
    const EditOp& op = *it;
    FrameRange region;
    if (op.kind == EditKind::Insertion) {
      if (table.word_count() == 0) throw Error(ErrorKind::NoWords, "cannot anchor an insertion");
      const std::size_t at = op.anchor() < table.word_count() ? table.word_ranges[op.anchor()].begin
                                                              : table.word_ranges.back().end;
      region = {at, at};
    } else {
      region = word_span_frames(table, op.orig_begin, op.orig_end - 1);
    }
    std::optional<MelSpectrogram> predicted;
    if (op.kind != EditKind::Deletion) {
      const double per_word = opts.frames_per_word.value_or(median_word_duration(table));
      const auto len = static_cast<std::size_t>(
          std::max(1L, std::lround(static_cast<double>(op.new_words.size()) * per_word)));
      predicted = opts.predictor(original, region, len);
    }
    result.splices.push_back({region, predicted ? predicted->n_frames() : 0});
    result.mel = splice(result.mel, region, predicted);
  }
  std::reverse(result.splices.begin(), result.splices.end());
  return result;
}

inline MelSpectrogram edit_pipeline(const MelSpectrogram& original, const AlignmentTable& table,
                                    const EditPlan& plan, const EditOptions& opts = {}) {
  return edit_pipeline_detailed(original, table, plan, opts).mel;
}

}  // namespace fluentcrit
