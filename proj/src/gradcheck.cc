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
#include "avvp/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace avvp {
namespace {

constexpr double kThresholdMargin = 1e-3;

// Largest threshold below `best` that keeps kThresholdMargin away from every
// probability in `probs`, or a negative value if none exists.
double SafeThreshold(std::vector<double> probs, double best) {
  std::sort(probs.begin(), probs.end());
  double tau = best - kThresholdMargin;
  for (int pass = 0; pass < 1000 && tau > 0.0; ++pass) {
    const bool clear = std::none_of(probs.begin(), probs.end(), [&](double p) {
      return std::fabs(p - tau) < kThresholdMargin;
    });
    if (clear) return tau;
    tau -= kThresholdMargin;
  }
  return -1.0;
}

}  // namespace

ToyProblem MakeToyProblem(std::uint64_t seed) {
  GenConfig gen;
  gen.n_videos = 1;
  gen.num_segments = 4;
  gen.num_classes = 3;
  gen.audio_dim = 8;
  gen.visual_dim = 8;
  gen.min_span = 1;
  gen.max_span = 3;
  gen.max_events = 2;
  gen.seed = seed;

  ModelConfig mc;
  mc.num_segments = 4;
  mc.num_classes = 3;
  mc.audio_dim = 8;
  mc.visual_dim = 8;
  mc.d_model = 16;
  mc.n_heads = 2;
  mc.seed = seed;

  ToyProblem toy;
  toy.video = GenerateDataset(gen).videos.front();
  toy.params = InitParams(mc);

  // Teacher at its initial copy of the student; one segment per labelled
  // class keeps the mask nonempty.
  const TeacherState teacher(toy.params, 0.9);
  toy.mask = TopKMask(TeacherPredict(teacher, toy.video), toy.video.video_label, 1);

  const Prediction pred = Predict(toy.params, toy.video);
  std::vector<double> probs;
  double best = 0.0;
  for (std::size_t t = 0; t < mc.num_segments; ++t) {
    for (std::size_t c = 0; c < mc.num_classes; ++c) {
      const double pa = pred.audio_probs.at(t, c);
      const double pv = pred.visual_probs.at(t, c);
      probs.push_back(pa);
      probs.push_back(pv);
      if (toy.video.video_label[c]) best = std::max(best, std::min(pa, pv));
    }
  }
  const double tau = SafeThreshold(probs, best);
  if (tau <= 0.0) {
    throw NumericalError("MakeToyProblem: no separable pair threshold for seed " +
                         std::to_string(seed));
  }
  toy.options.use_pseudo = true;
  toy.options.use_cma = true;
  toy.options.tau_a = tau;
  toy.options.tau_v = tau;
  return toy;
}

GradCheckResult CheckTotalLossGradient(const ToyProblem& toy, double epsilon) {
  const ModelConfig& mc = toy.params.config();
  GradCheckResult result;
  ModelParams work = toy.params;

  const GradFn f = [&](std::span<const double> flat, std::vector<double>* grad) {
    work.Assign(flat);
    Tape tape(/*record=*/grad != nullptr);
    const ParamVars vars = BindParams(tape, work, /*trainable=*/grad != nullptr);
    const ForwardOutput fwd = Forward(tape, vars, toy.video);
    const TotalLoss loss = ComputeTotalLoss(fwd, toy.video, &toy.mask, toy.options);
    if (grad) {
      tape.Backward(loss.total);
      *grad = CollectGrads(tape, vars, mc).Flatten();
      result.mask_count = loss.report.mask_count;
      result.num_pairs = loss.report.num_pairs;
    }
    return loss.report.l_total;
  };

  const std::vector<double> flat = toy.params.Flatten();
  result.num_params = flat.size();
  result.max_rel_error = GradCheck(f, flat, epsilon);
  return result;
}

}  // namespace avvp
