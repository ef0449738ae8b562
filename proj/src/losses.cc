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

namespace avvp {
namespace {

Tensor LabelTensor(std::span<const std::uint8_t> label) {
  Tensor y({label.size()});
  for (std::size_t c = 0; c < label.size(); ++c) y[c] = label[c] ? 1.0 : 0.0;
  return y;
}

Var ZeroLoss(Tape& tape) { return tape.Constant(Tensor::Scalar(0.0)); }

}  // namespace

Var AvvpLoss(Var video_probs, std::span<const std::uint8_t> video_label) {
  Tape& tape = *video_probs.tape;
  if (video_probs.value().size() != video_label.size()) {
    throw ShapeError("AvvpLoss: " + ShapeToString(video_probs.value().shape()) +
                     " predictions for " + std::to_string(video_label.size()) +
                     " labels");
  }
  const Tensor y = LabelTensor(video_label);
  Tensor not_y(y.shape());
  for (std::size_t c = 0; c < y.size(); ++c) not_y[c] = 1.0 - y[c];

  const Var p = Clamp(video_probs, kProbFloor, 1.0 - kProbFloor);
  const Var log_p = Log(p);
  const Var log_not_p = Log(AddScalar(Scale(p, -1.0), 1.0));
  const Var ll = Add(Mul(tape.Constant(y), log_p), Mul(tape.Constant(not_y), log_not_p));
  return Scale(Mean(ll), -1.0);
}

Var PseudoLoss(Var fused, const BinaryGrid& mask) {
  Tape& tape = *fused.tape;
  const Tensor& p = fused.value();
  if (p.rank() != 2 || p.rows() != mask.rows() || p.cols() != mask.cols()) {
    throw ShapeError("PseudoLoss: predictions " + ShapeToString(p.shape()) +
                     " and mask [" + std::to_string(mask.rows()) + ", " +
                     std::to_string(mask.cols()) + "] disagree");
  }
  const std::size_t count = mask.count();
  if (count == 0) return ZeroLoss(tape);
  Tensor m(p.shape());
  for (std::size_t t = 0; t < mask.rows(); ++t)
    for (std::size_t c = 0; c < mask.cols(); ++c) m.at(t, c) = mask.at(t, c);
  const Var log_p = Log(Clamp(fused, kProbFloor, 1.0 - kProbFloor));
  return Scale(Sum(Mul(tape.Constant(std::move(m)), log_p)),
               -1.0 / static_cast<double>(count));
}

ValidPairSet SelectValidPairs(const Tensor& audio_probs,
                              const Tensor& visual_probs,
                              std::span<const std::uint8_t> video_label,
                              double tau_a, double tau_v) {
  if (audio_probs.shape() != visual_probs.shape() || audio_probs.rank() != 2 ||
      audio_probs.cols() != video_label.size()) {
    throw ShapeError("SelectValidPairs: shapes " +
                     ShapeToString(audio_probs.shape()) + " and " +
                     ShapeToString(visual_probs.shape()) + " with " +
                     std::to_string(video_label.size()) + " labels");
  }
  ValidPairSet set;
  set.tau_a = tau_a;
  set.tau_v = tau_v;
  for (std::size_t t = 0; t < audio_probs.rows(); ++t)
    for (std::size_t c = 0; c < audio_probs.cols(); ++c)
      if (video_label[c] && audio_probs.at(t, c) > tau_a &&
          visual_probs.at(t, c) > tau_v) {
        set.pairs.emplace_back(t, c);
      }
  return set;
}

Var CmaLoss(Var audio_emb, Var visual_emb, const ValidPairSet& pairs) {
  Tape& tape = *audio_emb.tape;
  const Tensor& a = audio_emb.value();
  if (a.shape() != visual_emb.value().shape() || a.rank() != 2) {
    throw ShapeError("CmaLoss: embeddings " + ShapeToString(a.shape()) + " and " +
                     ShapeToString(visual_emb.value().shape()) + " disagree");
  }
  if (pairs.empty()) return ZeroLoss(tape);
  Tensor weight({a.rows()});
  for (const auto& [t, c] : pairs.pairs) {
    if (t >= a.rows()) {
      throw ShapeError("CmaLoss: pair segment " + std::to_string(t) +
                       " out of range for " + ShapeToString(a.shape()));
    }
    weight[t] += 1.0;
  }
  const Var dots = RowSum(Mul(audio_emb, visual_emb));
  const Var norms = AddScalar(Mul(RowNorm(audio_emb), RowNorm(visual_emb)),
                              kCosineEpsilon);
  const Var distance = AddScalar(Scale(Div(dots, norms), -1.0), 1.0);
  return Scale(Sum(Mul(tape.Constant(std::move(weight)), distance)),
               1.0 / static_cast<double>(pairs.size()));
}

TotalLoss ComputeTotalLoss(const ForwardOutput& forward,
                           const VideoSample& sample, const PseudoMask* mask,
                           const LossOptions& options) {
  TotalLoss out;
  Var total = AvvpLoss(forward.probs.video_probs, sample.video_label);
  out.report.l_avvp = total.value().item();
  if (options.use_pseudo && mask != nullptr) {
    const Var fused =
        FuseProbs(forward.probs.audio_probs, forward.probs.visual_probs);
    const Var term = Scale(PseudoLoss(fused, mask->cells), options.pseudo_weight);
    out.report.l_pseudo = term.value().item();
    out.report.mask_count = mask->cells.count();
    total = Add(total, term);
  }
  if (options.use_cma) {
    const ValidPairSet pairs = SelectValidPairs(
        forward.probs.audio_probs.value(), forward.probs.visual_probs.value(),
        sample.video_label, options.tau_a, options.tau_v);
    const Var term = Scale(
        CmaLoss(forward.refined.audio, forward.refined.visual, pairs),
        options.cma_weight);
    out.report.l_cma = term.value().item();
    out.report.num_pairs = pairs.size();
    total = Add(total, term);
  }
  out.report.l_total = total.value().item();
  out.total = total;
  return out;
}

}  // namespace avvp
