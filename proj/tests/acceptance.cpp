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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fluentcrit/fluentcrit.hpp"
#include "test_support.hpp"

using namespace fluentcrit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- AC1 -------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  SeededRng rng(0xAC1);
  double worst = 0.0;
  const int n = 120;
  for (int i = 0; i < n; ++i) {
    const auto g = testing::gradient_instance(rng);
    const auto analytic = loss_gradient(g.pred, g.gt, g.table, g.mask, g.batch, g.weights, g.tau);
    const auto numeric = finite_diff_oracle(
        [&](const MelSpectrogram& x) {
          return total_loss(x, g.gt, g.table, g.mask, g.batch, g.weights, g.tau).total;
        },
        g.pred, g.mask.span, 1e-4);
    worst = std::max(worst, testing::max_relative_error(analytic, numeric));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0,
          fmt("%d instances, max rel err %.3g, %.1f s", n, worst, secs)};
}

// --- AC2 -------------------------------------------------------------------

Outcome zero_identities() {
  SeededRng rng(0xAC2);
  int bad = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t bins = 2 + rng.index(30);
    const auto cfg = testing::small_config(bins);
    const auto a = testing::random_alignment(rng, 8, cfg, 6);
    const auto m = select_word_mask(a.table, 0.2 + 0.8 * rng.uniform(), rng.next_u64());
    const auto gt = testing::random_mel(a.n_frames, bins, rng, 3.0);
    if (hlac_loss(gt, gt, a.table, m).hlac_total != 0.0) ++bad;
    if (mae_loss(gt, gt, m.span) != 0.0) ++bad;
    if (ssim_loss(gt, gt, m.span) != 0.0) ++bad;
  }
  return {bad == 0, fmt("50 random gt, %d non-zero values", bad)};
}

// --- AC3 -------------------------------------------------------------------

double direct_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

Outcome cgpc_forms() {
  double worst = 0.0;
  const std::vector<ProsodyEmbedding> same{{{0.3, -1.0, 2.0}}, {{0.3, -1.0, 2.0}}};
  for (double tau : {0.05, 0.1, 1.0})
    worst = std::max(worst, std::fabs(cgpc_loss(same, same, tau) - 2.0 * std::log(2.0)));
  const std::vector<ProsodyEmbedding> opposed{{{1.0, 0.0}}, {{-1.0, 0.0}}};
  worst = std::max(worst, std::fabs(cgpc_loss(opposed, opposed, 0.5) - 2.0 * std::log(1.0 + std::exp(-4.0))));

  SeededRng rng(0xAC3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 2 + rng.index(4), dim = 2 + rng.index(16);
    const double tau = 0.05 + 0.95 * rng.uniform();
    std::vector<ProsodyEmbedding> m(b), u(b);
    for (std::size_t i = 0; i < b; ++i) {
      m[i].vector.resize(dim);
      u[i].vector.resize(dim);
      for (double& x : m[i].vector) x = rng.normal();
      for (double& x : u[i].vector) x = rng.normal();
    }
    double direct = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      double denom = 0.0;
      for (std::size_t k = 0; k < b; ++k) denom += std::exp(direct_cosine(m[i].vector, u[k].vector) / tau);
      direct += -std::log(std::exp(direct_cosine(m[i].vector, u[i].vector) / tau) / denom);
    }
    worst = std::max(worst, std::fabs(cgpc_loss(m, u, tau) - direct));
  }
  return {worst < 1e-9, fmt("closed forms + 100 batches, max abs err %.3g", worst)};
}

// --- AC4 -------------------------------------------------------------------

// Units rebuilt from the per-frame maps alone: maximal runs of one phoneme,
// and first-to-last frame of each word.
std::vector<FrameRange> naive_units(const AlignmentTable& t, Level level) {
  std::vector<FrameRange> units;
  if (level == Level::Frame) {
    for (std::size_t f = 0; f < t.n_frames; ++f) units.push_back({f, f + 1});
    return units;
  }
  const auto& map = level == Level::Phoneme ? t.frame_to_phoneme : t.frame_to_word;
  std::size_t count = level == Level::Phoneme ? t.phonemes.size() : t.words.size();
  for (std::size_t u = 0; u < count; ++u) {
    std::size_t lo = t.n_frames, hi = 0;
    for (std::size_t f = 0; f < t.n_frames; ++f)
      if (map[f] == u) {
        lo = std::min(lo, f);
        hi = f + 1;
      }
    units.push_back({lo, hi});
  }
  return units;
}

double naive_hlac(const MelSpectrogram& pred, const MelSpectrogram& gt, const AlignmentTable& t,
                  FrameRange span) {
  const std::size_t bins = gt.n_mels();
  auto mean = [&](const MelSpectrogram& mel, FrameRange u, std::size_t d) {
    double s = 0;
    for (std::size_t f = u.begin; f < u.end; ++f) s += mel.at(f, d);
    return s / double(u.size());
  };
  double total = 0.0;
  for (Level level : kAllLevels) {
    const auto units = naive_units(t, level);
    for (int side = 0; side < 2; ++side) {
      std::optional<FrameRange> in, out;
      for (const auto& u : units) {
        const bool inside = u.begin >= span.begin && u.end <= span.end;
        if (side == 0) {
          if (inside && (!in || u.begin < in->begin)) in = u;
          if (u.end <= span.begin && (!out || u.end > out->end)) out = u;
        } else {
          if (inside && (!in || u.end > in->end)) in = u;
          if (u.begin >= span.end && (!out || u.begin < out->begin)) out = u;
        }
      }
      if (!in || !out) continue;
      double acc = 0.0;
      for (std::size_t d = 0; d < bins; ++d) {
        const double dp = std::fabs(mean(pred, *in, d) - mean(pred, *out, d));
        const double dg = std::fabs(mean(gt, *in, d) - mean(gt, *out, d));
        acc += (dp - dg) * (dp - dg);
      }
      total += acc / double(bins);
    }
  }
  return total;
}

Outcome hlac_equivalence() {
  SeededRng rng(0xAC4);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t bins = 1 + rng.index(12);
    const auto cfg = testing::small_config(bins);
    const auto a = testing::random_alignment(rng, 3, cfg, 5);
    MaskSpec m;
    const std::size_t first = rng.index(a.table.word_count());
    const std::size_t last = first + rng.index(a.table.word_count() - first);
    m.span = word_span_frames(a.table, first, last);
    const auto gt = testing::random_mel(a.n_frames, bins, rng);
    const auto pred = testing::random_mel(a.n_frames, bins, rng);
    const double lib = hlac_loss(pred, gt, a.table, m).hlac_total;
    worst = std::max(worst, std::fabs(lib - naive_hlac(pred, gt, a.table, m.span)));
  }
  return {worst < 1e-9, fmt("200 instances, max abs diff %.3g", worst)};
}

// --- AC5 -------------------------------------------------------------------

Outcome mask_integrity() {
  SeededRng rng(0xAC5);
  const auto cfg = testing::small_config(4);
  int partial = 0, suboptimal = 0, checks = 0;
  for (int i = 0; i < 500; ++i) {
    const auto a = testing::random_alignment(rng, 20, cfg, 6);
    const auto& t = a.table;
    for (int step = 0; step < 8; ++step) {
      const double lambda = 0.6 + 0.05 * step;
      const auto m = select_word_mask(t, lambda, rng.next_u64());
      ++checks;
      for (std::size_t f = 0; f < t.n_frames; ++f) {
        const auto w = t.frame_to_word[f];
        if (w == kSilence) continue;
        for (std::size_t g = 0; g < t.n_frames; ++g)
          if (t.frame_to_word[g] == w && m.span.contains(g) != m.span.contains(f)) {
            ++partial;
            g = t.n_frames;
            f = t.n_frames;
          }
      }
      double voiced = 0;
      for (auto w : t.frame_to_word) voiced += w != kSilence;
      double best = INFINITY;
      for (std::size_t x = 0; x < t.word_count(); ++x)
        for (std::size_t y = x; y < t.word_count(); ++y) {
          std::size_t lo = t.n_frames, hi = 0;
          for (std::size_t f = 0; f < t.n_frames; ++f)
            if (t.frame_to_word[f] != kSilence && t.frame_to_word[f] >= x && t.frame_to_word[f] <= y) {
              lo = std::min(lo, f);
              hi = f + 1;
            }
          best = std::min(best, std::fabs(double(hi - lo) - lambda * voiced));
        }
      if (std::fabs(double(m.span.size()) - lambda * voiced) > best + 1e-9) ++suboptimal;
    }
  }
  return {partial == 0 && suboptimal == 0,
          fmt("%d masks, %d partial, %d suboptimal", checks, partial, suboptimal)};
}

// --- AC6 -------------------------------------------------------------------

Outcome alignment_exactness() {
  const MelConfig cfg;
  IntervalTier phones{"phones", 0.0, 1.0, {{0.0, 0.5, "AA"}, {0.5, 1.0, "sil"}}};
  IntervalTier words{"words", 0.0, 1.0, {{0.0, 0.5, "ah"}, {0.5, 1.0, ""}}};
  const TextGridDoc doc{0.0, 1.0, {phones, words}};
  const auto t = build_alignment(doc, frames_for_duration(1.0, cfg), cfg);
  const std::size_t in_interval = t.word_durations.at(0);
  bool ok = in_interval == 43 && t.word_ranges[0] == FrameRange{0, 43};

  SeededRng rng(0xAC6);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const auto grid = testing::random_continuous_grid(rng, cfg);
    const auto round = parse_textgrid(serialize_textgrid(grid));
    const std::size_t n = frames_for_duration(round.xmax, cfg);
    const auto a = build_alignment(round, n, cfg);
    std::size_t silent = 0, voiced = 0, lp = 0, lw = 0;
    for (std::size_t f = 0; f < n; ++f) {
      const auto p = a.frame_to_phoneme[f], w = a.frame_to_word[f];
      if (p == kSilence) {
        ++silent;
        violations += w != kSilence;
        continue;
      }
      violations += a.phoneme_to_word[p] != w;
      violations += p < lp || w < lw;
      lp = p;
      lw = w;
    }
    for (auto d : a.phoneme_durations) voiced += d;
    violations += voiced + silent != n;
  }
  ok = ok && violations == 0;
  return {ok, fmt("[0, 0.5) s holds %zu frames; 100 grids, %d invariant violations", in_interval,
                  violations)};
}

// --- AC7 -------------------------------------------------------------------

Outcome edit_mechanics() {
  SeededRng rng(0xAC7);
  int law = 0, context = 0, plans = 0;
  while (plans < 500) {
    const std::size_t bins = 1 + rng.index(8);
    const auto cfg = testing::small_config(bins);
    const auto a = testing::random_alignment(rng, 10, cfg, 5);
    const auto plan = diff_words(a.table.words, testing::random_edit(rng, a.table.words));
    const auto mel = testing::random_mel(a.n_frames, bins, rng);
    EditResult res;
    try {
      res = edit_pipeline_detailed(mel, a.table, plan);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::EmptyContext) continue;  // whole utterance rewritten
      throw;
    }
    ++plans;
    const double median = median_word_duration(a.table);
    long expected = long(a.n_frames);
    for (const auto& op : plan.ops) {
      if (op.kind != EditKind::Insertion)
        expected -= long(a.table.word_ranges[op.orig_end - 1].end - a.table.word_ranges[op.orig_begin].begin);
      if (op.kind != EditKind::Deletion)
        expected += std::max(1L, std::lround(double(op.new_words.size()) * median));
    }
    law += long(res.mel.n_frames()) != expected;
    std::size_t src = 0, dst = 0;
    bool same = true;
    auto copy_check = [&](std::size_t until) {
      for (; src < until; ++src, ++dst)
        for (std::size_t d = 0; d < bins; ++d) same = same && res.mel.at(dst, d) == mel.at(src, d);
    };
    for (const auto& s : res.splices) {
      copy_check(s.region.begin);
      src = s.region.end;
      dst += s.inserted;
    }
    copy_check(mel.n_frames());
    context += !same;
  }

  int round_trip = 0;
  for (int i = 0; i < 200; ++i) {
    const auto mel = testing::random_mel(1 + rng.index(50), 1 + rng.index(8), rng);
    const std::size_t x = rng.index(mel.n_frames() + 1);
    const std::size_t y = x + rng.index(mel.n_frames() - x + 1);
    round_trip += !(splice(splice(mel, {x, y}, std::nullopt), {x, x}, mel.slice(x, y)) == mel);
  }

  const auto hundred = testing::random_mel(100, 4, rng);
  MelSpectrogram ten(hundred.config(), 10);
  const bool fig = splice(hundred, {40, 60}, std::nullopt).n_frames() == 80 &&
                   splice(hundred, {40, 40}, ten).n_frames() == 110;
  return {law == 0 && context == 0 && round_trip == 0 && fig,
          fmt("500 plans: %d length, %d context failures; %d round-trip failures; 100->80/110 %s", law,
              context, round_trip, fig ? "ok" : "wrong")};
}

// --- AC8 -------------------------------------------------------------------

Outcome ablation_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  int wins = 0;
  double reduction = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto u = synthetic_utterance(6, 20, 800 + seed);
    const auto m = select_word_mask(u.alignment, 0.5, seed);
    ToyTrainConfig cfg;
    cfg.seed = 800 + seed;
    cfg.weights = {1.0, 0.0, 1.0};
    const double with = *toy_train(u.mel, u.alignment, m, cfg).final_boundary_discontinuity;
    cfg.weights = {0.0, 0.0, 1.0};
    const double without = *toy_train(u.mel, u.alignment, m, cfg).final_boundary_discontinuity;
    wins += with <= without;
    reduction += (without - with) / without;
  }
  reduction /= 20.0;
  const double secs = seconds_since(t0);
  return {wins >= 18 && reduction >= 0.10 && secs < 300.0,
          fmt("alpha=1 no worse in %d/20 pairs, mean reduction %.1f%%, %.1f s", wins, 100.0 * reduction, secs)};
}

// --- AC9 -------------------------------------------------------------------

Outcome mcd_oracle() {
  SeededRng rng(0xAC9);
  const std::size_t bins = 80;
  const auto gt = testing::random_mel(40, bins, rng, 2.0);
  const double identity = mcd(gt, gt);

  auto pred = gt;
  for (std::size_t f = 0; f < gt.n_frames(); ++f)
    for (std::size_t i = 0; i < bins; ++i)
      pred.at(f, i) += 0.1 * std::sqrt(2.0 / bins) *
                       std::cos(std::numbers::pi * (2.0 * i + 1.0) / (2.0 * bins));
  const double offset = mcd(pred, gt);
  const double expected = 10.0 / std::log(10.0) * std::sqrt(2.0 * 0.01);

  double sym = 0.0, flat = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto a = testing::random_mel(1 + rng.index(30), 20 + rng.index(60), rng);
    const auto b = testing::random_mel(a.n_frames(), a.n_mels(), rng);
    auto shifted = a;
    const double c = 10.0 * rng.normal();
    for (double& v : shifted.data()) v += c;
    sym = std::max(sym, std::fabs(mcd(a, b) - mcd(b, a)));
    flat = std::max(flat, std::fabs(mcd(shifted, b) - mcd(a, b)));
  }
  return {identity == 0.0 && std::fabs(offset - expected) < 1e-6 && std::fabs(expected - 0.6142) < 1e-4 &&
              sym < 1e-9 && flat < 1e-9,
          fmt("identity %.3g, c1 offset %.7f dB (want %.7f), symmetry %.2g, offset %.2g", identity, offset,
              expected, sym, flat)};
}

// --- AC10 ------------------------------------------------------------------

template <typename Fn>
bool only_kind(Fn&& fn, ErrorKind kind) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  } catch (...) {
    return false;
  }
  return true;
}

Outcome format_round_trips() {
  SeededRng rng(0xA10);
  int failures = 0;

  for (int i = 0; i < 300; ++i) {
    const auto mel = testing::random_f32_mel(rng.index(40), 1 + rng.index(100), rng);
    std::stringstream buf;
    write_mel(mel, buf);
    failures += !(read_mel(buf) == mel);

    auto bytes = encode_mel(mel);
    std::vector<unsigned char> raw(bytes.begin(), bytes.end());
    for (std::size_t k = 0, n = 1 + rng.index(4); k < n; ++k) {
      switch (rng.index(3)) {
        case 0: raw[rng.index(raw.size())] = static_cast<unsigned char>(rng.index(256)); break;
        case 1: raw.resize(rng.index(raw.size())); break;
        default: raw.push_back(static_cast<unsigned char>(rng.index(256))); break;
      }
      if (raw.empty()) break;
    }
    failures += !only_kind([&] { decode_mel(raw); }, ErrorKind::FormatError);
  }

  const auto cfg = testing::small_config(6);
  for (int i = 0; i < 200; ++i) {
    const auto a = testing::random_alignment(rng, 8, cfg);
    const auto aj = alignment_to_json(a.table).dump();
    failures += alignment_to_json(alignment_from_json(parse_json_text(aj))).dump() != aj;

    const auto m = select_word_mask(a.table, 0.1 + 0.9 * rng.uniform(), rng.next_u64());
    failures += !(mask_from_json(parse_json_text(mask_to_json(m).dump())) == m);

    const auto plan = diff_words(a.table.words, testing::random_edit(rng, a.table.words));
    failures += !(plan_from_json(parse_json_text(plan_to_json(plan).dump())) == plan);

    ReportRow row{"u" + std::to_string(i), 5.0 * rng.uniform(), rng.uniform(), {}};
    row.loss.total = rng.normal();
    row.loss.weights = {rng.uniform(), rng.uniform(), rng.uniform()};
    const auto doc = make_report({row}, weights_to_json(row.loss.weights));
    std::stringstream out;
    emit_report(doc, out);
    std::stringstream in(out.str());
    failures += !(parse_report(in) == doc);

    const auto tg = serialize_textgrid(a.doc);
    failures += !(parse_textgrid(tg) == a.doc);

    // Malformed variants of each text format.
    std::string json = aj;
    json[rng.index(json.size())] = "{}[]\",:x0-"[rng.index(10)];
    failures += !only_kind([&] { alignment_from_json(parse_json_text(json)); }, ErrorKind::ParseError);
    std::string broken = tg;
    broken.erase(rng.index(broken.size()), 1 + rng.index(20));
    failures += !only_kind([&] { parse_textgrid(broken); }, ErrorKind::ParseError);
  }
  return {failures == 0, fmt("MELF, alignment, mask, plan, report and TextGrid fuzz: %d failures", failures)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"AC1 gradient suite", gradient_suite},
      {"AC2 zero-loss identities", zero_identities},
      {"AC3 contrastive closed forms", cgpc_forms},
      {"AC4 HLAC brute-force equivalence", hlac_equivalence},
      {"AC5 word-mask integrity", mask_integrity},
      {"AC6 alignment exactness", alignment_exactness},
      {"AC7 edit mechanics", edit_mechanics},
      {"AC8 ablation direction", ablation_direction},
      {"AC9 MCD oracle", mcd_oracle},
      {"AC10 format round trips", format_round_trips},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("unexpected exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
