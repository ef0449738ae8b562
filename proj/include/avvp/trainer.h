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
#ifndef AVVP_TRAINER_H_
#define AVVP_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "avvp/checkpoint.h"
#include "avvp/dataset.h"
#include "avvp/losses.h"
#include "avvp/metrics.h"
#include "avvp/model.h"
#include "avvp/teacher.h"

namespace avvp {

enum class OptimizerKind { kSgd, kMomentum };
enum class MaskMode { kAdaptive, kTopK };

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 0.05;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double momentum = 0.9;

  // Teacher and pseudo masks.
  bool enable_ema = true;
  double alpha = 0.99;
  MaskMode mask_mode = MaskMode::kTopK;
  double gamma = 1.0;
  std::size_t k = 1;
  bool label_gating = true;
  // Epochs trained on the other terms before teacher masks are used.
  std::size_t warmup_epochs = 3;
  // Masks are regenerated with the current teacher every this many epochs.
  std::size_t mask_refresh_epochs = 1;

  // Cross-modal agreement.
  bool enable_cma = true;
  double tau_a = 0.5;
  double tau_v = 0.5;

  double pseudo_weight = 1.0;
  double cma_weight = 1.0;

  bool shuffle = true;
  std::uint64_t seed = 1;

  // Raises std::invalid_argument.
  void Validate() const;
  LossOptions loss_options() const;
};

struct StepRecord {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::string video_id;
  LossReport loss;
};

struct TrainState {
  ModelParams student;
  TeacherState teacher;
  ModelParams velocity;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::mt19937_64 rng;
  std::vector<StepRecord> history;
  // Masks from the most recent refresh, one per training video.
  std::vector<PseudoMask> masks;
  std::uint64_t mask_epoch = 0;
};

TrainState InitTrainState(const ModelConfig& model, const TrainConfig& config);

// Mean per-step losses over one epoch.
struct EpochSummary {
  std::uint64_t epoch = 0;
  std::size_t steps = 0;
  double l_avvp = 0.0;
  double l_pseudo = 0.0;
  double l_cma = 0.0;
  double l_total = 0.0;
};

// One pass over `data` with batch size 1. Raises NumericalError naming the
// video and loss components when the loss goes non-finite.
EpochSummary TrainEpoch(TrainState& state, const Dataset& data,
                        const TrainConfig& config);

// Pseudo masks of the current teacher for every video of `data`.
std::vector<PseudoMask> GenerateMasks(const TeacherState& teacher,
                                      const Dataset& data,
                                      const TrainConfig& config);

// In-place optimizer step; plain SGD ignores `velocity`.
void ApplyGradients(ModelParams& params, const ModelParams& grads,
                    ModelParams& velocity, const TrainConfig& config);

// Segment predictions of the student, binarized at `threshold`.
std::vector<LabeledVideo> PredictLabels(const ModelParams& student,
                                        const Dataset& data,
                                        double threshold = 0.5);
std::vector<LabeledVideo> GroundTruthLabels(const Dataset& data);

// Matches predicted against ground-truth records by position; ids and
// shapes must agree.
MetricReport EvaluateLabels(std::span<const LabeledVideo> pred,
                            std::span<const LabeledVideo> gt);

// Student-only evaluation; the teacher is never consulted.
MetricReport Evaluate(const ModelParams& student, const Dataset& data,
                      double threshold = 0.5);

// step,epoch,video,l_avvp,l_pseudo,l_cma,l_total,num_pairs,mask_count
void WriteTrainingLog(std::ostream& out, std::span<const StepRecord> history);

Checkpoint MakeCheckpoint(const TrainState& state);

}  // namespace avvp

#endif  // AVVP_TRAINER_H_
