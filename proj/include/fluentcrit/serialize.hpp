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

// JSON schemas for alignment tables, mask specs, loss breakdowns and edit
// plans. Decoding failures surface as Error(ErrorKind::ParseError).

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fluentcrit/alignment.hpp"
#include "fluentcrit/criteria.hpp"
#include "fluentcrit/editing.hpp"
#include "fluentcrit/error.hpp"
#include "fluentcrit/masking.hpp"

namespace fluentcrit {

using Json = nlohmann::json;

namespace detail {

inline Json index_list(const std::vector<std::size_t>& v) {
  Json out = Json::array();
  for (std::size_t x : v) {
    if (x == kSilence) out.push_back(-1);
    else out.push_back(x);
  }
  return out;
}

inline std::vector<std::size_t> read_index_list(const Json& j) {
  std::vector<std::size_t> out;
  for (const auto& x : j) {
    const auto v = x.get<long long>();
    if (v < -1) throw Error(ErrorKind::ParseError, "negative frame index");
    out.push_back(v == -1 ? kSilence : static_cast<std::size_t>(v));
  }
  return out;
}

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string(what) + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) throw;
    throw Error(ErrorKind::ParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline Json alignment_to_json(const AlignmentTable& t) {
  return Json{{"n_frames", t.n_frames},
              {"words", t.words},
              {"phonemes", t.phonemes},
              {"phoneme_to_word", t.phoneme_to_word},
              {"frame_to_phoneme", detail::index_list(t.frame_to_phoneme)},
              {"frame_to_word", detail::index_list(t.frame_to_word)},
              {"durations", {{"phoneme", t.phoneme_durations}, {"word", t.word_durations}}}};
}

/// Rebuilds the table and re-checks its invariants; stored durations must
/// agree with the per-frame maps.
inline AlignmentTable alignment_from_json(const Json& j) {
  return detail::guarded("alignment JSON", [&] {
    AlignmentTable t;
    t.n_frames = j.at("n_frames").get<std::size_t>();
    t.words = j.at("words").get<std::vector<std::string>>();
    t.phonemes = j.at("phonemes").get<std::vector<std::string>>();
    t.phoneme_to_word = j.at("phoneme_to_word").get<std::vector<std::size_t>>();
    t.frame_to_phoneme = detail::read_index_list(j.at("frame_to_phoneme"));
    t.frame_to_word = detail::read_index_list(j.at("frame_to_word"));
    const auto pd = j.at("durations").at("phoneme").get<std::vector<std::size_t>>();
    const auto wd = j.at("durations").at("word").get<std::vector<std::size_t>>();
    t.finalize();
    if (pd != t.phoneme_durations || wd != t.word_durations)
      throw Error(ErrorKind::ParseError, "durations disagree with frame maps");
    return t;
  });
}

inline Json mask_to_json(const MaskSpec& m) {
  return Json{{"start", m.span.begin}, {"end", m.span.end},     {"first_word", m.first_word},
              {"last_word", m.last_word}, {"lambda", m.ratio_target}, {"seed", m.seed}};
}

inline MaskSpec mask_from_json(const Json& j) {
  return detail::guarded("mask JSON", [&] {
    MaskSpec m;
    m.span.begin = j.at("start").get<std::size_t>();
    m.span.end = j.at("end").get<std::size_t>();
    m.first_word = j.at("first_word").get<std::size_t>();
    m.last_word = j.at("last_word").get<std::size_t>();
    m.ratio_target = j.at("lambda").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (m.span.begin > m.span.end) throw Error(ErrorKind::ParseError, "mask start > end");
    if (m.first_word > m.last_word) throw Error(ErrorKind::ParseError, "mask first_word > last_word");
    if (!(m.ratio_target >= 0.0 && m.ratio_target <= 1.0))
      throw Error(ErrorKind::ParseError, "mask lambda outside [0, 1]");
    return m;
  });
}

/// Checks that a mask is word-aligned against the table it will be used with.
inline void check_mask_alignment(const MaskSpec& m, const AlignmentTable& t) {
  if (m.span.end > t.n_frames) throw Error(ErrorKind::IndexError, "mask span exceeds alignment");
  if (m.span.empty()) return;
  if (word_span_frames(t, m.first_word, m.last_word) != m.span)
    throw Error(ErrorKind::InvalidArgument, "mask span is not the frame span of its word range");
}

inline Json weights_to_json(const LossWeights& w) {
  return Json{{"alpha", w.alpha_hlac}, {"beta", w.beta_cgpc}, {"gamma", w.gamma_rec}};
}

inline LossWeights weights_from_json(const Json& j) {
  return detail::guarded("weights JSON", [&] {
    return LossWeights{j.at("alpha").get<double>(), j.at("beta").get<double>(),
                       j.at("gamma").get<double>()};
  });
}

inline Json loss_to_json(const LossBreakdown& b) {
  return Json{{"hlac_frame_L", b.hlac_frame_L},
              {"hlac_frame_R", b.hlac_frame_R},
              {"hlac_phoneme_L", b.hlac_phoneme_L},
              {"hlac_phoneme_R", b.hlac_phoneme_R},
              {"hlac_word_L", b.hlac_word_L},
              {"hlac_word_R", b.hlac_word_R},
              {"hlac_total", b.hlac_total},
              {"cgpc", b.cgpc},
              {"mae", b.mae},
              {"ssim_loss", b.ssim_loss},
              {"total", b.total},
              {"weights", weights_to_json(b.weights)}};
}

inline LossBreakdown loss_from_json(const Json& j) {
  return detail::guarded("loss JSON", [&] {
    LossBreakdown b;
    b.hlac_frame_L = j.at("hlac_frame_L").get<double>();
    b.hlac_frame_R = j.at("hlac_frame_R").get<double>();
    b.hlac_phoneme_L = j.at("hlac_phoneme_L").get<double>();
    b.hlac_phoneme_R = j.at("hlac_phoneme_R").get<double>();
    b.hlac_word_L = j.at("hlac_word_L").get<double>();
    b.hlac_word_R = j.at("hlac_word_R").get<double>();
    b.hlac_total = j.at("hlac_total").get<double>();
    b.cgpc = j.at("cgpc").get<double>();
    b.mae = j.at("mae").get<double>();
    b.ssim_loss = j.at("ssim_loss").get<double>();
    b.total = j.at("total").get<double>();
    b.weights = weights_from_json(j.at("weights"));
    return b;
  });
}

inline EditKind edit_kind_from_string(const std::string& s) {
  if (s == "insertion") return EditKind::Insertion;
  if (s == "replacement") return EditKind::Replacement;
  if (s == "deletion") return EditKind::Deletion;
  throw Error(ErrorKind::ParseError, "unknown edit kind '" + s + "'");
}

inline Json plan_to_json(const EditPlan& p) {
  Json ops = Json::array();
  for (const auto& op : p.ops)
    ops.push_back({{"kind", std::string(to_string(op.kind))},
                   {"orig_range", {op.orig_begin, op.orig_end}},
                   {"anchor", op.anchor()},
                   {"new_words", op.new_words}});
  return Json{{"ops", ops}, {"orig_words", p.orig_words}, {"edited_words", p.edited_words}};
}

/// Decodes and validates a plan: ops must replay orig_words into edited_words.
inline EditPlan plan_from_json(const Json& j) {
  return detail::guarded("edit plan JSON", [&] {
    EditPlan p;
    p.orig_words = j.at("orig_words").get<std::vector<std::string>>();
    p.edited_words = j.at("edited_words").get<std::vector<std::string>>();
    for (const auto& o : j.at("ops")) {
      EditOp op;
      op.kind = edit_kind_from_string(o.at("kind").get<std::string>());
      const auto range = o.at("orig_range").get<std::vector<std::size_t>>();
      if (range.size() != 2) throw Error(ErrorKind::ParseError, "orig_range must have two entries");
      op.orig_begin = range[0];
      op.orig_end = range[1];
      if (o.at("anchor").get<std::size_t>() != op.orig_begin)
        throw Error(ErrorKind::ParseError, "anchor must equal orig_range start");
      op.new_words = o.at("new_words").get<std::vector<std::string>>();
      p.ops.push_back(std::move(op));
    }
    validate_plan(p);
    return p;
  });
}

/// Parses text as JSON, mapping syntax errors to ParseError.
inline Json parse_json_text(const std::string& text) {
  return detail::guarded("JSON", [&] { return Json::parse(text); });
}

}  // namespace fluentcrit
