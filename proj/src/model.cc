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
#include "avvp/model.h"

#include <algorithm>
#include <cmath>
#include <random>

namespace avvp {
namespace {

struct GroupSpec {
  const char* name;
  Shape shape;
  std::size_t fan_in;
};

GroupSpec Spec(ParamGroup g, const ModelConfig& cfg) {
  const std::size_t dm = cfg.d_model, C = cfg.num_classes;
  const std::size_t da = cfg.audio_dim, dv = cfg.visual_dim;
  switch (g) {
    case ParamGroup::kAudioProjW: return {"audio_proj.w", {da, dm}, da};
    case ParamGroup::kAudioProjB: return {"audio_proj.b", {dm}, da};
    case ParamGroup::kVisualProjW: return {"visual_proj.w", {dv, dm}, dv};
    case ParamGroup::kVisualProjB: return {"visual_proj.b", {dm}, dv};
    case ParamGroup::kAudioSelfQ: return {"audio_self.q", {dm, dm}, dm};
    case ParamGroup::kAudioSelfK: return {"audio_self.k", {dm, dm}, dm};
    case ParamGroup::kAudioSelfV: return {"audio_self.v", {dm, dm}, dm};
    case ParamGroup::kAudioSelfO: return {"audio_self.o", {dm, dm}, dm};
    case ParamGroup::kVisualSelfQ: return {"visual_self.q", {dm, dm}, dm};
    case ParamGroup::kVisualSelfK: return {"visual_self.k", {dm, dm}, dm};
    case ParamGroup::kVisualSelfV: return {"visual_self.v", {dm, dm}, dm};
    case ParamGroup::kVisualSelfO: return {"visual_self.o", {dm, dm}, dm};
    case ParamGroup::kAudioCrossQ: return {"audio_cross.q", {dm, dm}, dm};
    case ParamGroup::kAudioCrossK: return {"audio_cross.k", {dm, dm}, dm};
    case ParamGroup::kAudioCrossV: return {"audio_cross.v", {dm, dm}, dm};
    case ParamGroup::kAudioCrossO: return {"audio_cross.o", {dm, dm}, dm};
    case ParamGroup::kVisualCrossQ: return {"visual_cross.q", {dm, dm}, dm};
    case ParamGroup::kVisualCrossK: return {"visual_cross.k", {dm, dm}, dm};
    case ParamGroup::kVisualCrossV: return {"visual_cross.v", {dm, dm}, dm};
    case ParamGroup::kVisualCrossO: return {"visual_cross.o", {dm, dm}, dm};
    case ParamGroup::kAudioClsW: return {"audio_cls.w", {dm, C}, dm};
    case ParamGroup::kAudioClsB: return {"audio_cls.b", {C}, dm};
    case ParamGroup::kVisualClsW: return {"visual_cls.w", {dm, C}, dm};
    case ParamGroup::kVisualClsB: return {"visual_cls.b", {C}, dm};
    case ParamGroup::kSegAttAudioW: return {"seg_att.audio_w", {dm, C}, 2 * dm};
    case ParamGroup::kSegAttVisualW: return {"seg_att.visual_w", {dm, C}, 2 * dm};
    case ParamGroup::kSegAttB: return {"seg_att.b", {C}, 2 * dm};
    case ParamGroup::kModAttW: return {"mod_att.w", {dm, C}, dm};
    case ParamGroup::kCount: break;
  }
  throw std::invalid_argument("unknown parameter group");
}

ParamGroup GroupAt(std::size_t i) { return static_cast<ParamGroup>(i); }

Var ProbHead(Var x, Var w, Var b) {
  return Clamp(Sigmoid(Add(MatMul(x, w), b)), kProbFloor, 1.0 - kProbFloor);
}

}  // namespace

void ModelConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("ModelConfig: " + what);
  };
  require(num_segments >= 1, "T must be at least 1");
  require(num_classes >= 1, "C must be at least 1");
  require(audio_dim >= 1 && visual_dim >= 1, "feature dims must be positive");
  require(d_model >= 1 && n_heads >= 1, "d_model and n_heads must be positive");
  require(d_model % n_heads == 0,
          "d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
              std::to_string(n_heads));
}

const char* ParamGroupName(ParamGroup g) {
  static const ModelConfig kAny;
  return Spec(g, kAny).name;
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config_.Validate();
  for (std::size_t i = 0; i < kNumParamGroups; ++i) {
    groups_[i] = Tensor::Zeros(Spec(GroupAt(i), config_).shape);
  }
}

std::size_t ModelParams::num_elements() const {
  std::size_t n = 0;
  for (const Tensor& t : groups_) n += t.size();
  return n;
}

std::vector<double> ModelParams::Flatten() const {
  std::vector<double> flat;
  flat.reserve(num_elements());
  for (const Tensor& t : groups_) flat.insert(flat.end(), t.vec().begin(), t.vec().end());
  return flat;
}

void ModelParams::Assign(std::span<const double> flat) {
  if (flat.size() != num_elements()) {
    throw ShapeError("ModelParams::Assign: " + std::to_string(flat.size()) +
                     " values for " + std::to_string(num_elements()) +
                     " parameters");
  }
  std::size_t offset = 0;
  for (Tensor& t : groups_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(),
                t.values().begin());
    offset += t.size();
  }
}

bool ModelParams::AllFinite() const {
  return std::all_of(groups_.begin(), groups_.end(),
                     [](const Tensor& t) { return t.AllFinite(); });
}

ModelParams InitParams(const ModelConfig& config) {
  ModelParams params(config);
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = 0; i < kNumParamGroups; ++i) {
    const GroupSpec spec = Spec(GroupAt(i), config);
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : params[GroupAt(i)].values()) v = dist(rng);
  }
  return params;
}

ParamVars BindParams(Tape& tape, const ModelParams& params, bool trainable) {
  ParamVars pv;
  pv.n_heads = params.config().n_heads;
  for (std::size_t i = 0; i < kNumParamGroups; ++i) {
    const Tensor& t = params[GroupAt(i)];
    pv.vars[i] = trainable ? tape.Leaf(t) : tape.Constant(t);
  }
  return pv;
}

ModelParams CollectGrads(const Tape& tape, const ParamVars& vars,
                         const ModelConfig& config) {
  ModelParams grads(config);
  for (std::size_t i = 0; i < kNumParamGroups; ++i) {
    grads[GroupAt(i)] = tape.grad(vars.vars[i]);
  }
  return grads;
}

Var MultiHeadAttention(Var query, Var context, Var wq, Var wk, Var wv, Var wo,
                       std::size_t n_heads) {
  const Var q = MatMul(query, wq);
  const Var k = MatMul(context, wk);
  const Var v = MatMul(context, wv);
  const std::size_t d = q.value().cols();
  if (n_heads == 0 || d % n_heads != 0) {
    throw ShapeError("MultiHeadAttention: width " + std::to_string(d) +
                     " does not split into " + std::to_string(n_heads) + " heads");
  }
  const std::size_t dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const Var qh = SliceCols(q, h * dh, (h + 1) * dh);
    const Var kh = SliceCols(k, h * dh, (h + 1) * dh);
    const Var vh = SliceCols(v, h * dh, (h + 1) * dh);
    const Var scores = Scale(MatMul(qh, Transpose(kh)), scale);
    heads.push_back(MatMul(Softmax(scores, 1), vh));
  }
  return MatMul(Concat(heads, 1), wo);
}

Embeddings HanForward(const ParamVars& p, std::size_t n_heads, Var audio,
                      Var visual) {
  using G = ParamGroup;
  const Var a0 = Add(MatMul(audio, p[G::kAudioProjW]), p[G::kAudioProjB]);
  const Var v0 = Add(MatMul(visual, p[G::kVisualProjW]), p[G::kVisualProjB]);
  const Var a_self = MultiHeadAttention(a0, a0, p[G::kAudioSelfQ], p[G::kAudioSelfK],
                                        p[G::kAudioSelfV], p[G::kAudioSelfO], n_heads);
  const Var a_cross =
      MultiHeadAttention(a0, v0, p[G::kAudioCrossQ], p[G::kAudioCrossK],
                         p[G::kAudioCrossV], p[G::kAudioCrossO], n_heads);
  const Var v_self =
      MultiHeadAttention(v0, v0, p[G::kVisualSelfQ], p[G::kVisualSelfK],
                         p[G::kVisualSelfV], p[G::kVisualSelfO], n_heads);
  const Var v_cross =
      MultiHeadAttention(v0, a0, p[G::kVisualCrossQ], p[G::kVisualCrossK],
                         p[G::kVisualCrossV], p[G::kVisualCrossO], n_heads);
  // Attention has no notion of position, so the co-located segment of the
  // other modality is added pointwise as well.
  return {Add(Add(Add(a0, a_self), a_cross), v0),
          Add(Add(Add(v0, v_self), v_cross), a0)};
}

MmilOutput MmilPool(const ParamVars& p, const Embeddings& refined) {
  using G = ParamGroup;
  const Var pa = ProbHead(refined.audio, p[G::kAudioClsW], p[G::kAudioClsB]);
  const Var pv = ProbHead(refined.visual, p[G::kVisualClsW], p[G::kVisualClsB]);

  // Temporal attention, per class, softmax down each column.
  const Var seg_scores = Add(Add(MatMul(refined.audio, p[G::kSegAttAudioW]),
                                 MatMul(refined.visual, p[G::kSegAttVisualW])),
                             p[G::kSegAttB]);
  const Var seg_weights = Softmax(seg_scores, 0);

  // Modality attention: a two-way softmax is a sigmoid of the score gap.
  const Var audio_score = MatMul(refined.audio, p[G::kModAttW]);
  const Var visual_score = MatMul(refined.visual, p[G::kModAttW]);
  const Var audio_weight = Sigmoid(Sub(audio_score, visual_score));
  const Var visual_weight = Sigmoid(Sub(visual_score, audio_score));

  const Var mixed = Add(Mul(audio_weight, pa), Mul(visual_weight, pv));
  const Var video = RowSum(Transpose(Mul(seg_weights, mixed)));
  return {pa, pv, video};
}

ForwardOutput Forward(Tape& tape, const ParamVars& params,
                      const VideoSample& sample) {
  if (!sample.audio.AllFinite() || !sample.visual.AllFinite()) {
    throw NumericalError("Forward: video '" + sample.id +
                         "' has non-finite features");
  }
  if (sample.audio.rank() != 2 || sample.visual.rank() != 2 ||
      sample.audio.rows() != sample.visual.rows()) {
    throw ShapeError("Forward: audio " + ShapeToString(sample.audio.shape()) +
                     " and visual " + ShapeToString(sample.visual.shape()) +
                     " features disagree");
  }
  const Var audio = tape.Constant(sample.audio);
  const Var visual = tape.Constant(sample.visual);
  ForwardOutput out;
  out.refined = HanForward(params, params.n_heads, audio, visual);
  out.probs = MmilPool(params, out.refined);
  return out;
}

Tensor FuseProbs(const Tensor& x, const Tensor& y) {
  if (x.shape() != y.shape()) {
    throw ShapeError("FuseProbs: incompatible shapes " + ShapeToString(x.shape()) +
                     " and " + ShapeToString(y.shape()));
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] + y[i]) * 0.5;
  return out;
}

Var FuseProbs(Var x, Var y) {
  if (x.value().shape() != y.value().shape()) {
    throw ShapeError("FuseProbs: incompatible shapes " +
                     ShapeToString(x.value().shape()) + " and " +
                     ShapeToString(y.value().shape()));
  }
  return Scale(Add(x, y), 0.5);
}

Prediction Predict(const ModelParams& params, const VideoSample& sample) {
  Tape tape(/*record=*/false);
  const ParamVars pv = BindParams(tape, params, /*trainable=*/false);
  const ForwardOutput out = Forward(tape, pv, sample);
  return {out.probs.audio_probs.value(), out.probs.visual_probs.value(),
          out.probs.video_probs.value()};
}

}  // namespace avvp
