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
#ifndef AVVP_LOSSES_H_
#define AVVP_LOSSES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "avvp/dataset.h"
#include "avvp/model.h"
#include "avvp/teacher.h"
#include "avvp/tensor.h"

namespace avvp {

// Added to the product of norms in the cosine similarity.
inline constexpr double kCosineEpsilon = 1e-12;

// Mean binary cross-entropy between clamped video probabilities [C] and the
// weak label.
Var AvvpLoss(Var video_probs, std::span<const std::uint8_t> video_label);

// (1 / |M|) sum_{t,c} M[t,c] * -log(P[t,c]) over the clamped fused student
// probabilities. An empty mask yields a constant 0. Unmasked cells receive
// exactly zero gradient.
Var PseudoLoss(Var fused, const BinaryGrid& mask);

// Segment-class pairs where both modalities are confident and the class is
// in the weak label, ordered by (t, c).
struct ValidPairSet {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double tau_a = 0.5;
  double tau_v = 0.5;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

// (t, c) is kept iff P_a[t,c] > tau_a, P_v[t,c] > tau_v and label[c] == 1.
ValidPairSet SelectValidPairs(const Tensor& audio_probs,
                              const Tensor& visual_probs,
                              std::span<const std::uint8_t> video_label,
                              double tau_a, double tau_v);

// Mean over pairs of 1 - cos(e_a[t], e_v[t]). The similarity depends on t
// only, so a segment that appears with m classes is weighted m times. An
// empty set yields a constant 0.
Var CmaLoss(Var audio_emb, Var visual_emb, const ValidPairSet& pairs);

struct LossOptions {
  bool use_pseudo = true;
  bool use_cma = true;
  double tau_a = 0.5;
  double tau_v = 0.5;
  // The tested objective is the unweighted sum; weights exist for
  // experiments only.
  double pseudo_weight = 1.0;
  double cma_weight = 1.0;
};

// Components as they enter the sum, so l_total == l_avvp + l_pseudo + l_cma.
struct LossReport {
  double l_avvp = 0.0;
  double l_pseudo = 0.0;
  double l_cma = 0.0;
  double l_total = 0.0;
  std::size_t num_pairs = 0;
  std::size_t mask_count = 0;
};

struct TotalLoss {
  Var total;
  LossReport report;
};

// L = L_avvp + L_pseudo + L_cma on one video. Disabled terms, and the pseudo
// term when `mask` is null, contribute nothing.
TotalLoss ComputeTotalLoss(const ForwardOutput& forward,
                           const VideoSample& sample, const PseudoMask* mask,
                           const LossOptions& options);

}  // namespace avvp

#endif  // AVVP_LOSSES_H_
