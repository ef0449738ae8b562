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
#include "avvp/losses.h"

#include <cmath>
#include <random>
#include <vector>

#include "avvp/gradcheck.h"
#include "doctest.h"
#include "oracles.h"

namespace avvp {
namespace {

std::vector<std::uint8_t> Bytes(const std::vector<int>& v) {
  return std::vector<std::uint8_t>(v.begin(), v.end());
}

double Avvp(const std::vector<double>& p, const std::vector<int>& y) {
  Tape tape;
  const std::size_t n = p.size();
  return AvvpLoss(tape.Constant(Tensor({n}, p)), Bytes(y)).value().item();
}

TEST_CASE("video-level BCE") {
  CHECK(Avvp({1.0, 0.0, 1.0}, {1, 0, 1}) < 1e-6);
  CHECK(Avvp({0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 1}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(4);
    std::vector<int> y(4);
    for (auto& v : p) v = oracle::Uniform(rng, 0, 1);
    for (auto& v : y) v = oracle::Uniform(rng, 0, 1) < 0.5;
    CHECK(std::abs(Avvp(p, y) - oracle::AvvpLoss(p, y)) < 1e-12);
  }
  Tape tape;
  CHECK_THROWS_AS(AvvpLoss(tape.Constant(Tensor({3})), Bytes({1, 0})), ShapeError);
}

TEST_CASE("masked pseudo loss") {
  Tape tape;
  const Var p = tape.Constant(Tensor({2, 2}, {0.3, 0.6, 0.1, 0.9}));
  CHECK(PseudoLoss(p, BinaryGrid(2, 2)).value().item() == 0.0);

  BinaryGrid one(1, 1);
  one.set(0, 0, true);
  CHECK(PseudoLoss(tape.Constant(Tensor({1, 1}, {1.0})), one).value().item() ==
        doctest::Approx(-std::log(1.0 - 1e-7)).epsilon(1e-12));

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor fused = oracle::RandomTensor(rng, 5, 3, 0, 1);
    const BinaryGrid mask = oracle::RandomGrid(rng, 5, 3, 0.4);
    Tape t;
    const Var x = t.Leaf(fused);
    const Var loss = PseudoLoss(x, mask);
    CHECK(std::abs(loss.value().item() - oracle::PseudoLoss(fused, oracle::ToGrid(mask))) <
          1e-12);
    if (mask.count() == 0) continue;
    t.Backward(loss);
    const Tensor g = t.grad(x);
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 3; ++c) {
        if (!mask.at(r, c)) CHECK(g.at(r, c) == 0.0);
      }
  }
  CHECK_THROWS_AS(PseudoLoss(p, BinaryGrid(3, 2)), ShapeError);
}

TEST_CASE("valid pair selection") {
  const Tensor pa({2, 2}, {0.9, 0.2, 0.6, 0.7});
  const Tensor pv({2, 2}, {0.8, 0.9, 0.4, 0.7});
  const ValidPairSet s = SelectValidPairs(pa, pv, Bytes({1, 0}), 0.5, 0.5);
  REQUIRE(s.size() == 1);
  CHECK(s.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});

  CHECK(SelectValidPairs(pa, pv, Bytes({1, 1}), 1.0, 1.0).empty());
  CHECK(SelectValidPairs(pa, pv, Bytes({1, 1}), 0.0, 0.0).size() == 4);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor a = oracle::RandomTensor(rng, 6, 4, 0, 1);
    const Tensor v = oracle::RandomTensor(rng, 6, 4, 0, 1);
    std::vector<int> y(4);
    for (auto& b : y) b = oracle::Uniform(rng, 0, 1) < 0.5;
    const double ta = oracle::Uniform(rng, 0.2, 0.8), tv = oracle::Uniform(rng, 0.2, 0.8);
    CHECK(SelectValidPairs(a, v, Bytes(y), ta, tv).pairs ==
          oracle::ValidPairs(a, v, y, ta, tv));
  }
}

TEST_CASE("cross-modal agreement loss") {
  Tape tape;
  const Tensor e({2, 3}, {1, 2, 3, -1, 0.5, 2});
  ValidPairSet both;
  both.pairs = {{0, 0}, {1, 2}};
  CHECK(CmaLoss(tape.Constant(e), tape.Constant(e), both).value().item() < 1e-12);

  Tensor neg = e;
  for (double& x : neg.values()) x = -x;
  CHECK(CmaLoss(tape.Constant(e), tape.Constant(neg), both).value().item() ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(CmaLoss(tape.Constant(e), tape.Constant(neg), ValidPairSet{}).value().item() == 0.0);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor ea = oracle::RandomTensor(rng, 5, 6, -1, 1);
    const Tensor ev = oracle::RandomTensor(rng, 5, 6, -1, 1);
    ValidPairSet s;
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t c = 0; c < 3; ++c)
        if (oracle::Uniform(rng, 0, 1) < 0.3) s.pairs.emplace_back(t, c);
    Tape t;
    const double got = CmaLoss(t.Constant(ea), t.Constant(ev), s).value().item();
    CHECK(std::abs(got - oracle::CmaLoss(ea, ev, s.pairs)) < 1e-12);
    CHECK(got >= 0.0);
    CHECK(got <= 2.0);

    const Tensor q = oracle::RandomOrthogonal(rng, 6);
    const double rotated =
        CmaLoss(t.Constant(oracle::MatMul(ea, q)), t.Constant(oracle::MatMul(ev, q)), s)
            .value()
            .item();
    CHECK(std::abs(rotated - got) < 1e-9);
  }
}

TEST_CASE("total loss is the plain sum of its parts") {
  const ToyProblem toy = MakeToyProblem(3);
  Tape tape;
  const ForwardOutput fwd = Forward(tape, BindParams(tape, toy.params, true), toy.video);

  const TotalLoss all = ComputeTotalLoss(fwd, toy.video, &toy.mask, toy.options);
  CHECK(all.report.mask_count > 0);
  CHECK(all.report.num_pairs > 0);
  CHECK(std::abs(all.report.l_total -
                 (all.report.l_avvp + all.report.l_pseudo + all.report.l_cma)) < 1e-12);
  CHECK(all.report.l_avvp ==
        AvvpLoss(fwd.probs.video_probs, toy.video.video_label).value().item());

  LossOptions none = toy.options;
  none.use_pseudo = false;
  none.use_cma = false;
  const TotalLoss bare = ComputeTotalLoss(fwd, toy.video, &toy.mask, none);
  CHECK(bare.report.l_total == bare.report.l_avvp);
  CHECK(bare.report.l_pseudo == 0.0);
  CHECK(bare.report.l_cma == 0.0);

  const TotalLoss no_mask = ComputeTotalLoss(fwd, toy.video, nullptr, toy.options);
  CHECK(no_mask.report.l_pseudo == 0.0);
}

TEST_CASE("full loss gradient on the toy instance") {
  for (std::uint64_t seed : {1, 2, 3}) {
    INFO("seed " << seed);
    const ToyProblem toy = MakeToyProblem(seed);
    const GradCheckResult r = CheckTotalLossGradient(toy);
    CHECK(r.mask_count > 0);
    CHECK(r.num_pairs > 0);
    CHECK(r.max_rel_error < 1e-5);
  }
}

}  // namespace
}  // namespace avvp
