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
#ifndef AVVP_TEACHER_H_
#define AVVP_TEACHER_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "avvp/dataset.h"
#include "avvp/metrics.h"
#include "avvp/model.h"

namespace avvp {

// Slowly moving copy of the student: theta' <- alpha theta' + (1 - alpha) theta.
class TeacherState {
 public:
  TeacherState() = default;
  // Starts as a copy of `student`. Raises std::invalid_argument unless
  // alpha is in [0, 1).
  TeacherState(const ModelParams& student, double alpha);

  // Every read of the teacher weights is counted, so callers can verify
  // that a disabled teacher is never consulted.
  const ModelParams& params() const {
    ++reads_;
    return params_;
  }
  double alpha() const { return alpha_; }
  std::uint64_t update_count() const { return update_count_; }
  std::uint64_t reads() const { return reads_; }

  // For checkpoint restore.
  void Restore(ModelParams params, std::uint64_t update_count);

 private:
  friend void EmaUpdate(TeacherState& teacher, const ModelParams& student);

  ModelParams params_;
  double alpha_ = 0.999;
  std::uint64_t update_count_ = 0;
  mutable std::uint64_t reads_ = 0;
};

// Raises ShapeError when the layouts differ. `student` is not modified.
void EmaUpdate(TeacherState& teacher, const ModelParams& student);

// Fused (audio + visual) / 2 segment probabilities of the teacher, computed
// without a gradient tape.
Tensor TeacherPredict(const TeacherState& teacher, const VideoSample& sample);

enum class MaskSource { kAdaptive, kTopK };

const char* MaskSourceName(MaskSource s);

struct PseudoMask {
  BinaryGrid cells;  // [T, C]
  MaskSource source = MaskSource::kAdaptive;
  // gamma for kAdaptive, k for kTopK.
  double param = 0.0;
};

// Per class c: tau_c = gamma * mean_t P[t,c]; cell (t,c) is set iff
// P[t,c] >= tau_c. With `label_gating`, classes absent from `video_label`
// stay all zero. Raises std::invalid_argument for T == 0 or gamma <= 0.
PseudoMask AdaptiveThresholdMask(const Tensor& fused,
                                 std::span<const std::uint8_t> video_label,
                                 double gamma, bool label_gating = true);

// Per labelled class: the min(k, T) segments with the highest P[t,c], ties
// going to the lower segment index. Raises std::invalid_argument for k == 0.
PseudoMask TopKMask(const Tensor& fused,
                    std::span<const std::uint8_t> video_label, std::size_t k,
                    bool label_gating = true);

// Text export for inspection:
//   video <id> <T> <C> <adaptive|topk> <param>
//   <T rows of C characters in {0,1}>
void WriteMask(std::ostream& out, const std::string& video_id,
               const PseudoMask& mask);

}  // namespace avvp

#endif  // AVVP_TEACHER_H_
