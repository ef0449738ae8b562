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
#ifndef AVVP_GRADCHECK_H_
#define AVVP_GRADCHECK_H_

#include <cstddef>
#include <cstdint>

#include "avvp/dataset.h"
#include "avvp/losses.h"
#include "avvp/model.h"
#include "avvp/teacher.h"

namespace avvp {

// A small instance on which every term of the total loss is active: one
// video (T=4, C=3, d=8), d_model=16, a nonempty teacher mask and a nonempty
// set of valid pairs.
struct ToyProblem {
  VideoSample video;
  ModelParams params;
  PseudoMask mask;
  LossOptions options;
};

// Deterministic in `seed`. The pair thresholds are placed at least 1e-3 away
// from every segment probability so that finite differences cannot change
// the selected pairs.
ToyProblem MakeToyProblem(std::uint64_t seed);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t num_params = 0;
  std::size_t mask_count = 0;
  std::size_t num_pairs = 0;
};

// Central differences of the total loss with respect to every parameter.
GradCheckResult CheckTotalLossGradient(const ToyProblem& toy,
                                       double epsilon = 1e-5);

}  // namespace avvp

#endif  // AVVP_GRADCHECK_H_
