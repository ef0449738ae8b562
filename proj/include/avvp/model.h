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
#ifndef AVVP_MODEL_H_
#define AVVP_MODEL_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "avvp/dataset.h"
#include "avvp/tensor.h"

namespace avvp {

// Probabilities are kept inside [kProbFloor, 1 - kProbFloor] wherever they
// can reach a logarithm.
inline constexpr double kProbFloor = 1e-7;

struct ModelConfig {
  std::size_t num_segments = 10;
  std::size_t num_classes = 5;
  std::size_t audio_dim = 16;
  std::size_t visual_dim = 16;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::uint64_t seed = 1;

  // Raises std::invalid_argument.
  void Validate() const;
  std::size_t head_dim() const { return d_model / n_heads; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Trainable tensors, in flattening order.
enum class ParamGroup : int {
  kAudioProjW,
  kAudioProjB,
  kVisualProjW,
  kVisualProjB,
  kAudioSelfQ,
  kAudioSelfK,
  kAudioSelfV,
  kAudioSelfO,
  kVisualSelfQ,
  kVisualSelfK,
  kVisualSelfV,
  kVisualSelfO,
  kAudioCrossQ,
  kAudioCrossK,
  kAudioCrossV,
  kAudioCrossO,
  kVisualCrossQ,
  kVisualCrossK,
  kVisualCrossV,
  kVisualCrossO,
  kAudioClsW,
  kAudioClsB,
  kVisualClsW,
  kVisualClsB,
  kSegAttAudioW,
  kSegAttVisualW,
  kSegAttB,
  kModAttW,
  kCount,
};

inline constexpr std::size_t kNumParamGroups =
    static_cast<std::size_t>(ParamGroup::kCount);

const char* ParamGroupName(ParamGroup g);

class ModelParams {
 public:
  ModelParams() = default;
  // Zero-initialized parameters with shapes fixed by `config`.
  explicit ModelParams(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const Tensor& operator[](ParamGroup g) const {
    return groups_[static_cast<std::size_t>(g)];
  }
  Tensor& operator[](ParamGroup g) { return groups_[static_cast<std::size_t>(g)]; }
  const std::array<Tensor, kNumParamGroups>& groups() const { return groups_; }

  std::size_t num_elements() const;
  std::vector<double> Flatten() const;
  // Inverse of Flatten(). Raises ShapeError on a size mismatch.
  void Assign(std::span<const double> flat);
  bool AllFinite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelConfig config_;
  std::array<Tensor, kNumParamGroups> groups_;
};

// Uniform in +-1/sqrt(fan_in), fan_in being the input width of the layer the
// tensor belongs to. Reproducible from config.seed.
ModelParams InitParams(const ModelConfig& config);

// Parameters placed on a tape, as leaves (trainable) or constants.
struct ParamVars {
  std::array<Var, kNumParamGroups> vars;
  std::size_t n_heads = 1;
  Var operator[](ParamGroup g) const { return vars[static_cast<std::size_t>(g)]; }
};

ParamVars BindParams(Tape& tape, const ModelParams& params, bool trainable);
// Gradients of the bound leaves after Tape::Backward, as a ModelParams
// with the same layout.
ModelParams CollectGrads(const Tape& tape, const ParamVars& vars,
                         const ModelConfig& config);

struct Embeddings {
  Var audio;   // [T, d_model]
  Var visual;  // [T, d_model]
};

// Multi-head scaled dot-product attention of `query` rows over `context`
// rows, followed by the output projection.
Var MultiHeadAttention(Var query, Var context, Var wq, Var wk, Var wv, Var wo,
                       std::size_t n_heads);

// Per modality: projection + self-attention over its own segments +
// cross-attention over the other modality + the other modality's projection
// at the same segment, all from the projected inputs. No positional
// encoding, so the map is permutation-equivariant in T.
Embeddings HanForward(const ParamVars& params, std::size_t n_heads, Var audio,
                      Var visual);

struct MmilOutput {
  Var audio_probs;   // [T, C]
  Var visual_probs;  // [T, C]
  Var video_probs;   // [C]
};

// Segment probabilities from per-modality sigmoid heads; the video
// prediction is
//
//   P_video[c] = sum_t w[t,c] * (b_a[t,c] * P_a[t,c] + b_v[t,c] * P_v[t,c])
//
// with w a softmax over segments and (b_a, b_v) a softmax over the two
// modalities, both per class. The weights form a convex combination.
MmilOutput MmilPool(const ParamVars& params, const Embeddings& refined);

struct ForwardOutput {
  Embeddings refined;
  MmilOutput probs;
};

// Raises NumericalError on non-finite features and ShapeError on dims that
// disagree with the parameters.
ForwardOutput Forward(Tape& tape, const ParamVars& params,
                      const VideoSample& sample);

// Elementwise (x + y) / 2.
Tensor FuseProbs(const Tensor& x, const Tensor& y);
Var FuseProbs(Var x, Var y);

// Tape-free evaluation helpers.
struct Prediction {
  Tensor audio_probs;
  Tensor visual_probs;
  Tensor video_probs;
};
Prediction Predict(const ModelParams& params, const VideoSample& sample);

}  // namespace avvp

#endif  // AVVP_MODEL_H_
