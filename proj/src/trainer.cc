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
#include "avvp/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

// Building with AVVP_BASELINE_ONLY removes every teacher and cross-modal
// code path from the training loop, leaving the plain video-level objective.

namespace avvp {
namespace {

std::string DescribeLoss(const LossReport& r) {
  std::ostringstream os;
  os << "l_avvp=" << r.l_avvp << " l_pseudo=" << r.l_pseudo
     << " l_cma=" << r.l_cma << " l_total=" << r.l_total;
  return os.str();
}

#ifndef AVVP_BASELINE_ONLY
bool MasksDue(const TrainState& state, const TrainConfig& config) {
  if (!config.enable_ema || state.epoch < config.warmup_epochs) return false;
  if (state.masks.empty()) return true;
  return (state.epoch - config.warmup_epochs) % config.mask_refresh_epochs == 0;
}
#endif

}  // namespace

void TrainConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("TrainConfig: ") + what);
  };
  require(learning_rate >= 0.0 && std::isfinite(learning_rate),
          "learning rate must be finite and >= 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
  require(gamma > 0.0, "gamma must be > 0");
  require(k >= 1, "k must be >= 1");
  require(tau_a >= 0.0 && tau_a <= 1.0 && tau_v >= 0.0 && tau_v <= 1.0,
          "tau_a and tau_v must lie in [0, 1]");
  require(mask_refresh_epochs >= 1, "mask refresh cadence must be >= 1");
}

LossOptions TrainConfig::loss_options() const {
  LossOptions o;
  o.use_pseudo = enable_ema;
  o.use_cma = enable_cma;
  o.tau_a = tau_a;
  o.tau_v = tau_v;
  o.pseudo_weight = pseudo_weight;
  o.cma_weight = cma_weight;
  return o;
}

TrainState InitTrainState(const ModelConfig& model, const TrainConfig& config) {
  config.Validate();
  TrainState state;
  state.student = InitParams(model);
  state.teacher = TeacherState(state.student, config.alpha);
  state.velocity = ModelParams(model);
  state.rng.seed(config.seed);
  return state;
}

std::vector<PseudoMask> GenerateMasks(const TeacherState& teacher,
                                      const Dataset& data,
                                      const TrainConfig& config) {
  std::vector<PseudoMask> masks;
  masks.reserve(data.videos.size());
  for (const VideoSample& v : data.videos) {
    const Tensor fused = TeacherPredict(teacher, v);
    masks.push_back(config.mask_mode == MaskMode::kTopK
                        ? TopKMask(fused, v.video_label, config.k, config.label_gating)
                        : AdaptiveThresholdMask(fused, v.video_label, config.gamma,
                                                config.label_gating));
  }
  return masks;
}

void ApplyGradients(ModelParams& params, const ModelParams& grads,
                    ModelParams& velocity, const TrainConfig& config) {
  const double lr = config.learning_rate;
  for (std::size_t g = 0; g < kNumParamGroups; ++g) {
    const auto group = static_cast<ParamGroup>(g);
    auto w = params[group].values();
    const auto dw = grads[group].values();
    if (config.optimizer == OptimizerKind::kMomentum) {
      auto vel = velocity[group].values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        vel[i] = config.momentum * vel[i] + dw[i];
        w[i] -= lr * vel[i];
      }
    } else {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * dw[i];
    }
  }
}

EpochSummary TrainEpoch(TrainState& state, const Dataset& data,
                        const TrainConfig& config) {
  config.Validate();
  ValidateDataset(data);
  const ModelConfig& mc = state.student.config();
  if (data.num_segments != mc.num_segments || data.num_classes != mc.num_classes ||
      data.audio_dim != mc.audio_dim || data.visual_dim != mc.visual_dim) {
    throw ShapeError("TrainEpoch: dataset dimensions do not match the model");
  }

#ifndef AVVP_BASELINE_ONLY
  if (MasksDue(state, config)) {
    state.masks = GenerateMasks(state.teacher, data, config);
    state.mask_epoch = state.epoch;
  }
  const bool use_masks = config.enable_ema && state.epoch >= config.warmup_epochs;
  const LossOptions options = config.loss_options();
#endif

  std::vector<std::size_t> order(data.videos.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (config.shuffle) std::shuffle(order.begin(), order.end(), state.rng);

  EpochSummary summary;
  summary.epoch = state.epoch;
  for (std::size_t idx : order) {
    const VideoSample& video = data.videos[idx];
    Tape tape;
    const ParamVars vars = BindParams(tape, state.student, /*trainable=*/true);
    const ForwardOutput fwd = Forward(tape, vars, video);

#ifndef AVVP_BASELINE_ONLY
    const PseudoMask* mask = use_masks ? &state.masks[idx] : nullptr;
    const TotalLoss loss = ComputeTotalLoss(fwd, video, mask, options);
#else
    TotalLoss loss;
    loss.total = AvvpLoss(fwd.probs.video_probs, video.video_label);
    loss.report.l_avvp = loss.total.value().item();
    loss.report.l_total = loss.report.l_avvp;
#endif

    if (!std::isfinite(loss.report.l_total)) {
      throw NumericalError("non-finite loss at step " + std::to_string(state.step) +
                           " on video '" + video.id + "': " +
                           DescribeLoss(loss.report));
    }
    tape.Backward(loss.total);
    const ModelParams grads = CollectGrads(tape, vars, mc);
    ApplyGradients(state.student, grads, state.velocity, config);

#ifndef AVVP_BASELINE_ONLY
    if (config.enable_ema) EmaUpdate(state.teacher, state.student);
#endif

    state.history.push_back({state.step, state.epoch, video.id, loss.report});
    ++state.step;
    ++summary.steps;
    summary.l_avvp += loss.report.l_avvp;
    summary.l_pseudo += loss.report.l_pseudo;
    summary.l_cma += loss.report.l_cma;
    summary.l_total += loss.report.l_total;
  }
  if (summary.steps) {
    const double n = static_cast<double>(summary.steps);
    summary.l_avvp /= n;
    summary.l_pseudo /= n;
    summary.l_cma /= n;
    summary.l_total /= n;
  }
  ++state.epoch;
  return summary;
}

std::vector<LabeledVideo> PredictLabels(const ModelParams& student,
                                        const Dataset& data, double threshold) {
  std::vector<LabeledVideo> out;
  out.reserve(data.videos.size());
  for (const VideoSample& v : data.videos) {
    const Prediction p = Predict(student, v);
    out.push_back({v.id, {Binarize(p.audio_probs, threshold),
                          Binarize(p.visual_probs, threshold)}});
  }
  return out;
}

std::vector<LabeledVideo> GroundTruthLabels(const Dataset& data) {
  std::vector<LabeledVideo> out;
  out.reserve(data.videos.size());
  for (const VideoSample& v : data.videos) out.push_back({v.id, v.segment_gt});
  return out;
}

MetricReport EvaluateLabels(std::span<const LabeledVideo> pred,
                            std::span<const LabeledVideo> gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("EvaluateLabels: " + std::to_string(pred.size()) +
                                " predictions for " + std::to_string(gt.size()) +
                                " ground-truth videos");
  }
  std::vector<VideoMetrics> per_video;
  per_video.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (pred[i].id != gt[i].id) {
      throw std::invalid_argument("EvaluateLabels: video " + std::to_string(i) +
                                  " is '" + pred[i].id + "' in predictions but '" +
                                  gt[i].id + "' in ground truth");
    }
    per_video.push_back(EvaluateVideo(pred[i].labels, gt[i].labels));
  }
  return Aggregate(per_video);
}

MetricReport Evaluate(const ModelParams& student, const Dataset& data,
                      double threshold) {
  const auto pred = PredictLabels(student, data, threshold);
  const auto gt = GroundTruthLabels(data);
  return EvaluateLabels(pred, gt);
}

void WriteTrainingLog(std::ostream& out, std::span<const StepRecord> history) {
  out << "step,epoch,video,l_avvp,l_pseudo,l_cma,l_total,num_pairs,mask_count\n";
  char buf[256];
  for (const StepRecord& r : history) {
    std::snprintf(buf, sizeof(buf), "%llu,%llu,%s,%.17g,%.17g,%.17g,%.17g,%zu,%zu\n",
                  static_cast<unsigned long long>(r.step),
                  static_cast<unsigned long long>(r.epoch), r.video_id.c_str(),
                  r.loss.l_avvp, r.loss.l_pseudo, r.loss.l_cma, r.loss.l_total,
                  r.loss.num_pairs, r.loss.mask_count);
    out << buf;
  }
}

Checkpoint MakeCheckpoint(const TrainState& state) {
  Checkpoint ckpt;
  ckpt.student = state.student;
  ckpt.teacher = state.teacher.params();
  ckpt.alpha = state.teacher.alpha();
  ckpt.teacher_updates = state.teacher.update_count();
  ckpt.step = state.step;
  ckpt.epoch = state.epoch;
  return ckpt;
}

}  // namespace avvp
