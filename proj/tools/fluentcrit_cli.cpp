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

// fluentcrit command-line front end.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fluentcrit/fluentcrit.hpp"

namespace fc = fluentcrit;

namespace {

fc::Error io_error(const std::string& what) { return fc::Error(fc::ErrorKind::InvalidArgument, what); }

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  return in;
}

std::string read_text(const std::string& path) {
  auto in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fc::Json read_json(const std::string& path) { return fc::parse_json_text(read_text(path)); }

fc::MelSpectrogram load_mel(const std::string& path) {
  auto in = open_in(path);
  return fc::read_mel(in);
}

void save_mel(const fc::MelSpectrogram& mel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  fc::write_mel(mel, out);
}

// Writes text to path, or stdout when path is empty.
void emit_text(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << text;
}

void emit_json(const fc::Json& j, const std::string& path) { emit_text(j.dump(2) + "\n", path); }

CLI::Option* add_seed(CLI::App* sub, std::uint64_t& seed) {
  return sub->add_option("--seed", seed, "RNG seed")->envname("FLUENTCRIT_SEED")->capture_default_str();
}

fc::BatchContext surrogate_batch(const fc::MelSpectrogram& gt, const fc::FrameRange& span,
                                 std::uint64_t seed, std::size_t extra) {
  fc::BatchContext batch;
  for (std::size_t k = 0; k < extra; ++k) {
    const auto other = fc::surrogate_utterance(gt.config(), gt.n_frames(), seed + k);
    batch.masked_region_embeds.push_back(fc::prosody_extract_standin(other, span));
    batch.utterance_embeds.push_back(fc::prosody_extract_standin(other));
  }
  return batch;
}

// --- featurize ---------------------------------------------------------------

struct FeaturizeArgs {
  std::string wav, out;
  fc::MelConfig cfg;
};

void run_featurize(const FeaturizeArgs& a) {
  auto in = open_in(a.wav);
  const auto clip = fc::read_wav(in);
  save_mel(fc::compute_mel(clip, a.cfg), a.out);
}

// --- align -------------------------------------------------------------------

struct AlignArgs {
  std::string textgrid, melf, out;
  fc::TierNames tiers;
};

void run_align(const AlignArgs& a) {
  const auto doc = fc::parse_textgrid(read_text(a.textgrid), a.tiers);
  const auto mel = load_mel(a.melf);
  fc::AlignmentOptions opts;
  opts.tiers = a.tiers;
  const auto table = fc::build_alignment(doc, mel.n_frames(), mel.config(), opts);
  emit_json(fc::alignment_to_json(table), a.out);
}

// --- mask --------------------------------------------------------------------

struct MaskArgs {
  std::string melf, alignment, out, masked_out;
  double lambda = 0.8;
  std::uint64_t seed = 0;
};

void run_mask(const MaskArgs& a) {
  const auto mel = load_mel(a.melf);
  const auto table = fc::alignment_from_json(read_json(a.alignment));
  if (table.n_frames != mel.n_frames())
    throw fc::Error(fc::ErrorKind::ShapeError, "alignment and spectrogram frame counts differ");
  const auto spec = fc::select_word_mask(table, a.lambda, a.seed);
  if (!a.masked_out.empty()) save_mel(fc::apply_mask(mel, spec, a.seed), a.masked_out);
  emit_json(fc::mask_to_json(spec), a.out);
}

// --- loss --------------------------------------------------------------------

struct LossArgs {
  std::string pred, gt, alignment, mask, out, id;
  std::vector<std::string> negatives;
  fc::LossWeights weights;
  double tau = fc::kDefaultTemperature;
  std::uint64_t seed = 0;
};

void run_loss(const LossArgs& a) {
  const auto pred = load_mel(a.pred);
  const auto gt = load_mel(a.gt);
  const auto table = fc::alignment_from_json(read_json(a.alignment));
  const auto spec = fc::mask_from_json(read_json(a.mask));
  fc::check_mask_alignment(spec, table);

  fc::BatchContext batch;
  for (const auto& path : a.negatives) {
    const auto other = load_mel(path);
    batch.masked_region_embeds.push_back(fc::prosody_extract_standin(other, spec.span));
    batch.utterance_embeds.push_back(fc::prosody_extract_standin(other));
  }
  if (batch.size() == 0 && a.weights.beta_cgpc != 0.0) batch = surrogate_batch(gt, spec.span, a.seed, 1);

  fc::ReportRow row;
  row.id = a.id.empty() ? a.pred : a.id;
  row.loss = fc::total_loss(pred, gt, table, spec, batch, a.weights, a.tau);
  row.mcd_db = fc::mcd(pred, gt);
  const auto bounds = fc::span_boundaries(spec.span, pred.n_frames());
  if (!bounds.empty()) row.boundary_discontinuity = fc::boundary_discontinuity(pred, bounds);

  fc::Json config = fc::weights_to_json(a.weights);
  config["tau"] = a.tau;
  config["seed"] = a.seed;
  config["negatives"] = a.negatives.empty() && a.weights.beta_cgpc != 0.0 ? "surrogate" : "files";
  std::ostringstream out;
  fc::emit_report(fc::make_report({row}, config), out);
  emit_text(out.str(), a.out);
}

// --- edit --------------------------------------------------------------------

struct EditArgs {
  std::string melf, alignment, plan, orig, edited, out, plan_out;
};

void run_edit(const EditArgs& a) {
  const auto mel = load_mel(a.melf);
  const auto table = fc::alignment_from_json(read_json(a.alignment));
  fc::EditPlan plan;
  if (!a.plan.empty()) {
    plan = fc::plan_from_json(read_json(a.plan));
  } else {
    const auto orig = fc::tokenize_words(a.orig);
    plan = fc::diff_words(orig, fc::tokenize_words(a.edited));
  }
  const auto result = fc::edit_pipeline(mel, table, plan);
  save_mel(result, a.out);
  if (!a.plan_out.empty()) emit_json(fc::plan_to_json(plan), a.plan_out);
  std::cout << mel.n_frames() << " -> " << result.n_frames() << " frames, " << plan.ops.size()
            << " op(s)\n";
}

// --- mcd ---------------------------------------------------------------------

void run_mcd(const std::string& pred, const std::string& gt, std::size_t n_ceps) {
  std::printf("%.6f\n", fc::mcd(load_mel(pred), load_mel(gt), n_ceps));
}

// --- gradcheck -----------------------------------------------------------------

struct GradcheckArgs {
  std::size_t trials = 100;
  double h = 1e-4;
  double tolerance = 1e-4;
  double tau = fc::kDefaultTemperature;
  std::uint64_t seed = 0;
};

// Distance from the nearest |.| kink of the MAE and HLAC terms.
double kink_distance(const fc::MelSpectrogram& pred, const fc::MelSpectrogram& gt,
                     const fc::AlignmentTable& table, const fc::MaskSpec& spec) {
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t f = spec.span.begin; f < spec.span.end; ++f)
    for (std::size_t d = 0; d < gt.n_mels(); ++d)
      closest = std::min(closest, std::fabs(pred.at(f, d) - gt.at(f, d)));
  for (fc::Level level : fc::kAllLevels)
    for (fc::Side side : {fc::Side::Left, fc::Side::Right}) {
      try {
        for (double v : fc::boundary_delta(pred, table, spec, level, side).delta)
          closest = std::min(closest, v);
      } catch (const fc::Error& e) {
        if (e.kind() != fc::ErrorKind::MissingNeighbor) throw;
      }
    }
  return closest;
}

int run_gradcheck(const GradcheckArgs& a) {
  fc::SeededRng rng(a.seed);
  double worst = 0.0;
  std::size_t done = 0;
  while (done < a.trials) {
    const auto u = fc::synthetic_utterance(1 + rng.index(3), 4 + rng.index(13), rng.next_u64());
    const auto spec = fc::select_word_mask(u.alignment, 0.3 + 0.6 * rng.uniform(), rng.next_u64());
    auto pred = u.mel;
    for (double& v : pred.data()) v += 0.5 * rng.normal();
    if (kink_distance(pred, u.mel, u.alignment, spec) < 1e-3) continue;
    const auto batch = surrogate_batch(u.mel, spec.span, rng.next_u64(), 1 + rng.index(3));
    const fc::LossWeights w{0.2 + rng.uniform(), 0.2 + rng.uniform(), 0.2 + rng.uniform()};
    const auto analytic = fc::loss_gradient(pred, u.mel, u.alignment, spec, batch, w, a.tau);
    const auto numeric = fc::finite_diff_oracle(
        [&](const fc::MelSpectrogram& x) {
          return fc::total_loss(x, u.mel, u.alignment, spec, batch, w, a.tau).total;
        },
        pred, spec.span, a.h);
    for (std::size_t i = 0; i < analytic.values.size(); ++i) {
      const double x = analytic.values[i], y = numeric.values[i];
      if (std::fabs(x) > 1e-8) worst = std::max(worst, std::fabs(x - y) / std::max(std::fabs(x), std::fabs(y)));
    }
    ++done;
  }
  const bool ok = worst < a.tolerance;
  std::printf("%zu trials, h=%g, max relative error %.3e: %s\n", done, a.h, worst, ok ? "ok" : "FAILED");
  return ok ? 0 : 1;
}

// --- toytrain ------------------------------------------------------------------

struct ToyArgs {
  std::size_t words = 6, mels = 20, steps = 500;
  double lr = 0.1, lambda = 0.5, tau = fc::kDefaultTemperature;
  fc::LossWeights weights{1.0, 0.0, 1.0};
  bool ablate = false;
  std::uint64_t seed = 0;
  std::string out;
};

fc::Json run_summary(const fc::ToyRunResult& r) {
  fc::Json j{{"seed", r.seed},
             {"steps", r.steps},
             {"learning_rate", r.learning_rate},
             {"final_learning_rate", r.final_learning_rate},
             {"initial_loss", r.trajectory.front()},
             {"final_loss", fc::loss_to_json(r.final_loss)},
             {"trajectory", r.trajectory}};
  j["final_boundary_discontinuity"] =
      r.final_boundary_discontinuity ? fc::Json(*r.final_boundary_discontinuity) : fc::Json(nullptr);
  return j;
}

void run_toytrain(const ToyArgs& a) {
  const auto u = fc::synthetic_utterance(a.words, a.mels, a.seed);
  const auto spec = fc::select_word_mask(u.alignment, a.lambda, a.seed);
  fc::ToyTrainConfig cfg;
  cfg.weights = a.weights;
  cfg.tau = a.tau;
  cfg.steps = a.steps;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  fc::Json out{{"mask", fc::mask_to_json(spec)}, {"run", run_summary(fc::toy_train(u.mel, u.alignment, spec, cfg))}};
  if (a.ablate) {
    cfg.weights.alpha_hlac = 0.0;
    out["ablated"] = run_summary(fc::toy_train(u.mel, u.alignment, spec, cfg));
  }
  emit_json(out, a.out);
}

// --- report --------------------------------------------------------------------

void run_report(const std::vector<std::string>& inputs, const std::string& out_path) {
  std::vector<fc::ReportRow> rows;
  fc::Json config = fc::Json::object();
  for (const auto& path : inputs) {
    const auto j = read_json(path);
    if (j.contains("rows")) {
      const auto doc = fc::report_from_json(j);
      rows.insert(rows.end(), doc.rows.begin(), doc.rows.end());
      if (config.empty()) config = doc.config;
    } else {
      rows.push_back(fc::row_from_json(j));
    }
  }
  std::ostringstream out;
  fc::emit_report(fc::make_report(std::move(rows), config), out);
  emit_text(out.str(), out_path);
}

void add_weights(CLI::App* sub, fc::LossWeights& w, double& tau) {
  sub->add_option("--alpha", w.alpha_hlac, "HLAC weight")->capture_default_str();
  sub->add_option("--beta", w.beta_cgpc, "contrastive prosody weight")->capture_default_str();
  sub->add_option("--gamma", w.gamma_rec, "reconstruction weight")->capture_default_str();
  sub->add_option("--tau", tau, "contrastive temperature")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluentcrit: speech-editing training criteria and evaluation tools"};
  app.set_version_flag("--version", std::string(fc::kVersion));
  app.set_config("--config", "", "key = value configuration file (flags override it)");
  app.require_subcommand(1);

  FeaturizeArgs fa;
  auto* featurize = app.add_subcommand("featurize", "WAV (PCM16 mono) to log-mel MELF");
  featurize->add_option("wav", fa.wav)->required()->check(CLI::ExistingFile);
  featurize->add_option("-o,--output", fa.out)->required();
  featurize->add_option("--sample-rate", fa.cfg.sample_rate_hz)->capture_default_str();
  featurize->add_option("--n-fft", fa.cfg.n_fft)->capture_default_str();
  featurize->add_option("--hop", fa.cfg.hop_size)->capture_default_str();
  featurize->add_option("--win", fa.cfg.win_size)->capture_default_str();
  featurize->add_option("--n-mels", fa.cfg.n_mels)->capture_default_str();
  featurize->add_option("--fmin", fa.cfg.fmin_hz)->capture_default_str();
  featurize->add_option("--fmax", fa.cfg.fmax_hz)->capture_default_str();
  featurize->callback([&] { run_featurize(fa); });

  AlignArgs aa;
  auto* align = app.add_subcommand("align", "TextGrid + MELF to alignment JSON");
  align->add_option("textgrid", aa.textgrid)->required()->check(CLI::ExistingFile);
  align->add_option("melf", aa.melf)->required()->check(CLI::ExistingFile);
  align->add_option("-o,--output", aa.out);
  align->add_option("--phones-tier", aa.tiers.phones)->capture_default_str();
  align->add_option("--words-tier", aa.tiers.words)->capture_default_str();
  align->callback([&] { run_align(aa); });

  MaskArgs ma;
  auto* mask = app.add_subcommand("mask", "select a word-level mask");
  mask->add_option("melf", ma.melf)->required()->check(CLI::ExistingFile);
  mask->add_option("alignment", ma.alignment)->required()->check(CLI::ExistingFile);
  mask->add_option("--lambda", ma.lambda, "target masked fraction of voiced frames")->capture_default_str();
  add_seed(mask, ma.seed);
  mask->add_option("-o,--output", ma.out);
  mask->add_option("--masked-melf", ma.masked_out, "also write the masked spectrogram");
  mask->callback([&] { run_mask(ma); });

  LossArgs la;
  auto* loss = app.add_subcommand("loss", "evaluate the training criteria on one prediction");
  loss->add_option("pred", la.pred)->required()->check(CLI::ExistingFile);
  loss->add_option("gt", la.gt)->required()->check(CLI::ExistingFile);
  loss->add_option("alignment", la.alignment)->required()->check(CLI::ExistingFile);
  loss->add_option("mask", la.mask)->required()->check(CLI::ExistingFile);
  add_weights(loss, la.weights, la.tau);
  loss->add_option("--negative", la.negatives, "MELF supplying contrastive negatives (repeatable)")
      ->check(CLI::ExistingFile);
  loss->add_option("--id", la.id, "row id (defaults to the prediction path)");
  add_seed(loss, la.seed);
  loss->add_option("-o,--output", la.out);
  loss->callback([&] { run_loss(la); });

  EditArgs ea;
  auto* edit = app.add_subcommand("edit", "apply a word edit with the baseline predictor");
  edit->add_option("melf", ea.melf)->required()->check(CLI::ExistingFile);
  edit->add_option("alignment", ea.alignment)->required()->check(CLI::ExistingFile);
  auto* plan_opt = edit->add_option("--plan", ea.plan)->check(CLI::ExistingFile);
  auto* orig_opt = edit->add_option("--orig", ea.orig, "original transcript");
  auto* new_opt = edit->add_option("--new", ea.edited, "edited transcript");
  orig_opt->needs(new_opt);
  new_opt->needs(orig_opt);
  plan_opt->excludes(orig_opt)->excludes(new_opt);
  edit->add_option("-o,--output", ea.out)->required();
  edit->add_option("--plan-out", ea.plan_out, "write the plan used as JSON");
  edit->callback([&] {
    if (ea.plan.empty() && orig_opt->count() == 0)
      throw CLI::RequiredError("--plan or --orig/--new");
    run_edit(ea);
  });

  std::string mcd_pred, mcd_gt;
  std::size_t n_ceps = 13;
  auto* mcd = app.add_subcommand("mcd", "mel-cepstral distortion in dB");
  mcd->add_option("pred", mcd_pred)->required()->check(CLI::ExistingFile);
  mcd->add_option("gt", mcd_gt)->required()->check(CLI::ExistingFile);
  mcd->add_option("--n-ceps", n_ceps)->capture_default_str();
  mcd->callback([&] { run_mcd(mcd_pred, mcd_gt, n_ceps); });

  GradcheckArgs ga;
  int gradcheck_status = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic gradient vs central differences");
  gradcheck->set_help_flag("--help", "Print this help message and exit");
  gradcheck->add_option("--trials", ga.trials)->capture_default_str();
  gradcheck->add_option("--h", ga.h, "finite-difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", ga.tolerance)->capture_default_str();
  gradcheck->add_option("--tau", ga.tau)->capture_default_str();
  add_seed(gradcheck, ga.seed);
  gradcheck->callback([&] { gradcheck_status = run_gradcheck(ga); });

  ToyArgs ta;
  auto* toytrain = app.add_subcommand("toytrain", "gradient descent on a synthetic utterance");
  toytrain->add_flag("--ablate-hlac", ta.ablate, "also run with alpha = 0 and report both");
  toytrain->add_option("--words", ta.words)->capture_default_str();
  toytrain->add_option("--n-mels", ta.mels)->capture_default_str();
  toytrain->add_option("--steps", ta.steps)->capture_default_str();
  toytrain->add_option("--lr", ta.lr)->capture_default_str();
  toytrain->add_option("--lambda", ta.lambda)->capture_default_str();
  add_weights(toytrain, ta.weights, ta.tau);
  add_seed(toytrain, ta.seed);
  toytrain->add_option("-o,--output", ta.out);
  toytrain->callback([&] { run_toytrain(ta); });

  std::vector<std::string> rows;
  std::string report_out;
  auto* report = app.add_subcommand("report", "merge rows or reports into one report");
  report->add_option("rows", rows)->required()->check(CLI::ExistingFile);
  report->add_option("-o,--output", report_out);
  report->callback([&] { run_report(rows, report_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const fc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return gradcheck_status;
}
