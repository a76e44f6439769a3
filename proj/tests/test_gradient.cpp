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

#include "fluentcrit/criteria.hpp"
#include "test_support.hpp"

using namespace fluentcrit;
using Catch::Matchers::WithinAbs;

namespace {

double total_of(const testing::GradientInstance& g, const MelSpectrogram& x) {
  return total_loss(x, g.gt, g.table, g.mask, g.batch, g.weights, g.tau).total;
}

}  // namespace

TEST_CASE("analytic gradient matches central differences", "[gradient]") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = testing::gradient_instance(rng);
    const auto analytic = loss_gradient(g.pred, g.gt, g.table, g.mask, g.batch, g.weights, g.tau);
    const auto numeric = finite_diff_oracle([&](const MelSpectrogram& x) { return total_of(g, x); },
                                            g.pred, g.mask.span, 1e-4);
    REQUIRE(testing::max_relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("each term separately matches central differences", "[gradient]") {
  SeededRng rng(7);
  const LossWeights only[] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int trial = 0; trial < 10; ++trial) {
    auto g = testing::gradient_instance(rng);
    for (const auto& w : only) {
      g.weights = w;
      const auto analytic = loss_gradient(g.pred, g.gt, g.table, g.mask, g.batch, w, g.tau);
      const auto numeric = finite_diff_oracle([&](const MelSpectrogram& x) { return total_of(g, x); },
                                              g.pred, g.mask.span, 1e-4);
      REQUIRE(testing::max_relative_error(analytic, numeric) < 1e-4);
    }
  }
}

TEST_CASE("hlac gradient vanishes at pred == gt", "[gradient]") {
  SeededRng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testing::gradient_instance(rng);
    const auto grad = loss_gradient(g.gt, g.gt, g.table, g.mask, {}, {1, 0, 0});
    for (double v : grad.values) REQUIRE(v == 0.0);
  }
}

TEST_CASE("mae gradient is sign over span size", "[gradient]") {
  SeededRng rng(5);
  const auto g = testing::gradient_instance(rng);
  auto pred = g.gt;
  const auto span = g.mask.span;
  for (std::size_t f = span.begin; f < span.end; ++f)
    for (std::size_t d = 0; d < pred.n_mels(); ++d) pred.at(f, d) += (f + d) % 2 ? 0.01 : -0.02;
  const auto grad = loss_gradient(pred, g.gt, g.table, g.mask, {}, {0, 0, 1});
  const double n = double(span.size() * pred.n_mels());
  // gamma also weights the SSIM term; subtract its numeric gradient.
  const auto numeric_ssim = finite_diff_oracle(
      [&](const MelSpectrogram& x) { return ssim_loss(x, g.gt, span); }, pred, span, 1e-5);
  for (std::size_t f = span.begin; f < span.end; ++f)
    for (std::size_t d = 0; d < pred.n_mels(); ++d) {
      const double expected = ((f + d) % 2 ? 1.0 : -1.0) / n;
      REQUIRE_THAT(grad.at(f, d) - numeric_ssim.at(f, d), WithinAbs(expected, 1e-7));
    }
}

TEST_CASE("finite difference oracle", "[gradient]") {
  SeededRng rng(1);
  const auto x = testing::random_mel(6, 5, rng);
  const FrameRange span{1, 5};
  const auto sq = finite_diff_oracle(
      [](const MelSpectrogram& m) {
        double s = 0;
        for (double v : m.data()) s += v * v;
        return s;
      },
      x, span, 1e-4);
  for (std::size_t f = span.begin; f < span.end; ++f)
    for (std::size_t d = 0; d < 5; ++d) REQUIRE_THAT(sq.at(f, d), WithinAbs(2 * x.at(f, d), 1e-7));
  const auto flat = finite_diff_oracle([](const MelSpectrogram&) { return 4.0; }, x, span, 1e-4);
  for (double v : flat.values) REQUIRE(v == 0.0);
  REQUIRE_THROWS_AS(finite_diff_oracle([](const MelSpectrogram&) { return 0.0; }, x, span, 0.0), Error);
}

TEST_CASE("gradient errors", "[gradient]") {
  SeededRng rng(8);
  const auto g = testing::gradient_instance(rng);
  REQUIRE_THROWS_AS(loss_gradient(g.pred, g.gt, g.table, g.mask, {}, {1, 1, 1}), Error);
  REQUIRE_THROWS_AS(loss_gradient(g.pred, g.gt, g.table, g.mask, g.batch, {1, 1, 1}, 0.0), Error);
  MelSpectrogram other(g.gt.config(), g.gt.n_frames() + 1);
  REQUIRE_THROWS_AS(loss_gradient(other, g.gt, g.table, g.mask, g.batch), Error);
}
