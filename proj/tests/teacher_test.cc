/* Copyright 2026 The AVVP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "avvp/teacher.h"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "avvp/dataset.h"
#include "doctest.h"
#include "oracles.h"

namespace avvp {
namespace {

ModelConfig TinyConfig() {
  ModelConfig mc;
  mc.num_segments = 4;
  mc.num_classes = 2;
  mc.audio_dim = 3;
  mc.visual_dim = 3;
  mc.d_model = 4;
  mc.n_heads = 2;
  return mc;
}

ModelParams Filled(double v) {
  ModelParams p(TinyConfig());
  std::vector<double> flat(p.num_elements(), v);
  p.Assign(flat);
  return p;
}

Tensor Column(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n, 1}, std::move(v));
}

std::vector<int> MaskColumn(const PseudoMask& m, std::size_t c = 0) {
  std::vector<int> out;
  for (std::size_t t = 0; t < m.cells.rows(); ++t) out.push_back(m.cells.at(t, c));
  return out;
}

TEST_CASE("EMA update arithmetic") {
  TeacherState teacher(Filled(0.0), 0.9);
  EmaUpdate(teacher, Filled(1.0));
  for (double v : teacher.params().Flatten()) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(teacher.update_count() == 1);

  std::mt19937_64 rng(2);
  ModelParams student = InitParams(TinyConfig());
  TeacherState copy(Filled(0.37), 0.0);
  EmaUpdate(copy, student);
  CHECK(copy.params() == student);

  CHECK_THROWS_AS(TeacherState(student, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TeacherState(student, -0.1), std::invalid_argument);
  ModelConfig other = TinyConfig();
  other.d_model = 6;
  CHECK_THROWS_AS(EmaUpdate(copy, InitParams(other)), ShapeError);
}

TEST_CASE("EMA with a frozen student follows the geometric closed form") {
  ModelConfig mc = TinyConfig();
  mc.seed = 3;
  const ModelParams start = InitParams(mc);
  mc.seed = 4;
  const ModelParams target = InitParams(mc);
  TeacherState teacher(start, 0.9);
  for (int n = 0; n < 10; ++n) EmaUpdate(teacher, target);
  const std::vector<double> got = teacher.params().Flatten();
  const std::vector<double> t0 = start.Flatten(), ts = target.Flatten();
  const double decay = std::pow(0.9, 10);
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    worst = std::max(worst, std::abs((got[i] - ts[i]) - decay * (t0[i] - ts[i])));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("teacher prediction is the fused prediction of its weights") {
  std::mt19937_64 rng(5);
  ModelConfig mc = TinyConfig();
  const ModelParams student = InitParams(mc);
  VideoSample s;
  s.audio = oracle::RandomTensor(rng, 4, 3, -1, 1);
  s.visual = oracle::RandomTensor(rng, 4, 3, -1, 1);
  s.video_label = {1, 0};

  TeacherState teacher(student, 0.5);
  const Prediction sp = Predict(student, s);
  CHECK(TeacherPredict(teacher, s) == FuseProbs(sp.audio_probs, sp.visual_probs));

  mc.seed = 9;
  EmaUpdate(teacher, InitParams(mc));
  const Prediction tp = Predict(teacher.params(), s);
  const Tensor fused = TeacherPredict(teacher, s);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(fused.at(t, c) == (tp.audio_probs.at(t, c) + tp.visual_probs.at(t, c)) * 0.5);
}

TEST_CASE("adaptive threshold mask examples") {
  const std::vector<std::uint8_t> on = {1}, off = {0};
  // tau = mean = 0.25.
  CHECK(MaskColumn(AdaptiveThresholdMask(Column({0.1, 0.2, 0.3, 0.4}), on, 1.0)) ==
        std::vector<int>{0, 0, 1, 1});
  CHECK(MaskColumn(AdaptiveThresholdMask(Column({0.6, 0.6, 0.6, 0.6}), on, 1.0)) ==
        std::vector<int>{1, 1, 1, 1});
  CHECK(MaskColumn(AdaptiveThresholdMask(Column({0.9, 0.1, 0.8, 0.7}), off, 1.0)) ==
        std::vector<int>{0, 0, 0, 0});
  CHECK(MaskColumn(AdaptiveThresholdMask(Column({0.9, 0.1, 0.8, 0.7}), off, 1.0, false)) ==
        std::vector<int>{1, 0, 1, 1});
  CHECK_THROWS_AS(AdaptiveThresholdMask(Tensor({0, 1}), on, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(AdaptiveThresholdMask(Column({0.5}), on, 0.0), std::invalid_argument);
}

TEST_CASE("top-k mask examples") {
  const std::vector<std::uint8_t> on = {1}, off = {0};
  CHECK(MaskColumn(TopKMask(Column({0.9, 0.1, 0.8}), on, 2)) == std::vector<int>{1, 0, 1});
  CHECK(MaskColumn(TopKMask(Column({0.5, 0.5, 0.2}), on, 1)) == std::vector<int>{1, 0, 0});
  CHECK(MaskColumn(TopKMask(Column({0.2, 0.5, 0.5}), on, 1)) == std::vector<int>{0, 1, 0});
  CHECK(MaskColumn(TopKMask(Column({0.3, 0.1, 0.2}), on, 7)) == std::vector<int>{1, 1, 1});
  CHECK(MaskColumn(TopKMask(Column({0.3, 0.1, 0.2}), off, 2)) == std::vector<int>{0, 0, 0});
  CHECK_THROWS_AS(TopKMask(Column({0.3}), on, 0), std::invalid_argument);
}

TEST_CASE("mask properties on random probability grids") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t T = oracle::Index(rng, 1, 12), C = oracle::Index(rng, 1, 5);
    Tensor p({T, C});
    // Coarse values make ties common.
    for (double& v : p.values()) v = std::round(oracle::Uniform(rng, 0, 1) * 8) / 8;
    std::vector<std::uint8_t> y(C);
    for (auto& b : y) b = oracle::Uniform(rng, 0, 1) < 0.6;

    const PseudoMask adaptive = AdaptiveThresholdMask(p, y, 1.0);
    const PseudoMask tighter = AdaptiveThresholdMask(p, y, 1.3);
    const std::size_t k = oracle::Index(rng, 1, 4);
    const PseudoMask top = TopKMask(p, y, k);
    const PseudoMask wider = TopKMask(p, y, k + 1);
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<double> col(T);
      for (std::size_t t = 0; t < T; ++t) col[t] = p.at(t, c);
      const std::size_t arg = std::max_element(col.begin(), col.end()) - col.begin();
      const std::vector<int> expect = oracle::TopKColumn(col, k);
      int ones = 0;
      for (std::size_t t = 0; t < T; ++t) {
        ones += top.cells.at(t, c);
        CHECK(top.cells.at(t, c) == (y[c] ? expect[t] : 0));
        CHECK(tighter.cells.at(t, c) <= adaptive.cells.at(t, c));
        CHECK(top.cells.at(t, c) <= wider.cells.at(t, c));
      }
      CHECK(ones == (y[c] ? static_cast<int>(std::min(k, T)) : 0));
      if (y[c]) CHECK(adaptive.cells.at(arg, c) == 1);
    }
  }
}

TEST_CASE("mask text export") {
  PseudoMask m = TopKMask(Tensor({2, 2}, {0.9, 0.1, 0.2, 0.8}), std::vector<std::uint8_t>{1, 1}, 1);
  std::ostringstream out;
  WriteMask(out, "vid7", m);
  CHECK(out.str() == "video vid7 2 2 topk 1\n10\n01\n");
}

}  // namespace
}  // namespace avvp
