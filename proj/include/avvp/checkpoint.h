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
#ifndef AVVP_CHECKPOINT_H_
#define AVVP_CHECKPOINT_H_

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "avvp/model.h"

namespace avvp {

// Student and teacher weights with enough metadata to resume or evaluate.
//
// Layout, all integers and doubles little-endian:
//   "AVVPCKPT" u32 version
//   u64 x7  T, C, d_a, d_v, d_model, n_heads, seed
//   f64 alpha, u64 teacher updates, u64 step, u64 epoch
//   u32 group count, then per group:
//     u32 name length, name bytes, u32 rank, u64 dims[rank], u64 elements
//   f64[N] student, f64[N] teacher   (N = sum of group elements)
struct Checkpoint {
  ModelParams student;
  ModelParams teacher;
  double alpha = 0.99;
  std::uint64_t teacher_updates = 0;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void SaveCheckpoint(std::ostream& out, const Checkpoint& ckpt);
void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(std::istream& in);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace avvp

#endif  // AVVP_CHECKPOINT_H_
