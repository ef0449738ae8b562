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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace avvp {
namespace {

void CheckMaskInputs(const char* op, const Tensor& fused,
                     std::span<const std::uint8_t> video_label) {
  if (fused.rank() != 2 || fused.rows() == 0) {
    throw std::invalid_argument(std::string(op) +
                                ": need a [T, C] grid with T >= 1, got " +
                                ShapeToString(fused.shape()));
  }
  if (video_label.size() != fused.cols()) {
    throw ShapeError(std::string(op) + ": label has " +
                     std::to_string(video_label.size()) + " classes, grid has " +
                     std::to_string(fused.cols()));
  }
}

}  // namespace

TeacherState::TeacherState(const ModelParams& student, double alpha)
    : params_(student), alpha_(alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("TeacherState: alpha must lie in [0, 1), got " +
                                std::to_string(alpha));
  }
}

void TeacherState::Restore(ModelParams params, std::uint64_t update_count) {
  params_ = std::move(params);
  update_count_ = update_count;
}

void EmaUpdate(TeacherState& teacher, const ModelParams& student) {
  ++teacher.reads_;
  for (std::size_t g = 0; g < kNumParamGroups; ++g) {
    const auto group = static_cast<ParamGroup>(g);
    if (teacher.params_[group].shape() != student[group].shape()) {
      throw ShapeError(std::string("EmaUpdate: ") + ParamGroupName(group) + " is " +
                       ShapeToString(teacher.params_[group].shape()) +
                       " in the teacher and " + ShapeToString(student[group].shape()) +
                       " in the student");
    }
  }
  const double a = teacher.alpha_;
  for (std::size_t g = 0; g < kNumParamGroups; ++g) {
    const auto group = static_cast<ParamGroup>(g);
    auto dst = teacher.params_[group].values();
    const auto src = student[group].values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = a * dst[i] + (1.0 - a) * src[i];
    }
  }
  ++teacher.update_count_;
}

Tensor TeacherPredict(const TeacherState& teacher, const VideoSample& sample) {
  const Prediction p = Predict(teacher.params(), sample);
  return FuseProbs(p.audio_probs, p.visual_probs);
}

const char* MaskSourceName(MaskSource s) {
  return s == MaskSource::kTopK ? "topk" : "adaptive";
}

PseudoMask AdaptiveThresholdMask(const Tensor& fused,
                                 std::span<const std::uint8_t> video_label,
                                 double gamma, bool label_gating) {
  CheckMaskInputs("AdaptiveThresholdMask", fused, video_label);
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("AdaptiveThresholdMask: gamma must be > 0");
  }
  const std::size_t T = fused.rows(), C = fused.cols();
  PseudoMask mask{BinaryGrid(T, C), MaskSource::kAdaptive, gamma};
  for (std::size_t c = 0; c < C; ++c) {
    if (label_gating && !video_label[c]) continue;
    double total = 0.0;
    for (std::size_t t = 0; t < T; ++t) total += fused.at(t, c);
    const double tau = gamma * (total / static_cast<double>(T));
    for (std::size_t t = 0; t < T; ++t) mask.cells.set(t, c, fused.at(t, c) >= tau);
  }
  return mask;
}

PseudoMask TopKMask(const Tensor& fused,
                    std::span<const std::uint8_t> video_label, std::size_t k,
                    bool label_gating) {
  CheckMaskInputs("TopKMask", fused, video_label);
  if (k == 0) throw std::invalid_argument("TopKMask: k must be >= 1");
  const std::size_t T = fused.rows(), C = fused.cols();
  const std::size_t keep = std::min(k, T);
  PseudoMask mask{BinaryGrid(T, C), MaskSource::kTopK, static_cast<double>(k)};
  std::vector<std::size_t> order(T);
  for (std::size_t c = 0; c < C; ++c) {
    if (label_gating && !video_label[c]) continue;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fused.at(a, c) > fused.at(b, c);
    });
    for (std::size_t i = 0; i < keep; ++i) mask.cells.set(order[i], c, true);
  }
  return mask;
}

void WriteMask(std::ostream& out, const std::string& video_id,
               const PseudoMask& mask) {
  out << "video " << video_id << ' ' << mask.cells.rows() << ' '
      << mask.cells.cols() << ' ' << MaskSourceName(mask.source) << ' '
      << mask.param << '\n';
  for (std::size_t t = 0; t < mask.cells.rows(); ++t) {
    for (std::size_t c = 0; c < mask.cells.cols(); ++c) {
      out << (mask.cells.at(t, c) ? '1' : '0');
    }
    out << '\n';
  }
}

}  // namespace avvp
