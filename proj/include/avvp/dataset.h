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
#ifndef AVVP_DATASET_H_
#define AVVP_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "avvp/metrics.h"
#include "avvp/tensor.h"

namespace avvp {

// One video: T segment features per modality, its weak (video-level) label,
// and segment-level ground truth that is only read at evaluation time.
struct VideoSample {
  std::string id;
  Tensor audio;   // [T, d_a]
  Tensor visual;  // [T, d_v]
  std::vector<std::uint8_t> video_label;  // [C]
  SegmentLabels segment_gt;

  std::size_t num_segments() const { return audio.rows(); }
  std::size_t num_classes() const { return video_label.size(); }

  friend bool operator==(const VideoSample&, const VideoSample&) = default;
};

struct Dataset {
  std::size_t num_segments = 0;
  std::size_t num_classes = 0;
  std::size_t audio_dim = 0;
  std::size_t visual_dim = 0;
  std::vector<VideoSample> videos;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// OR over segments and modalities of the segment ground truth.
std::vector<std::uint8_t> VideoLabelFromSegments(const SegmentLabels& gt);

// Raises std::invalid_argument on dimension mismatch or non-binary labels.
void ValidateDataset(const Dataset& data);

// Splits off the trailing `n_tail` videos.
std::pair<Dataset, Dataset> SplitDataset(const Dataset& data,
                                         std::size_t n_tail);

struct EventMix {
  double audio_only = 0.3;
  double visual_only = 0.3;
  double audio_visual = 0.4;
};

struct GenConfig {
  std::size_t n_videos = 200;
  std::size_t num_segments = 10;
  std::size_t num_classes = 5;
  std::size_t audio_dim = 16;
  std::size_t visual_dim = 16;
  std::size_t min_events = 1;
  std::size_t max_events = 3;
  std::size_t min_span = 2;
  std::size_t max_span = 5;
  EventMix mix;
  double sigma = 0.3;
  // Norm of every class prototype.
  double signal = 1.0;
  std::uint64_t seed = 1;

  // Raises std::invalid_argument.
  void Validate() const;
};

// Per-class unit-norm directions (scaled by config.signal), one row per
// class. Rows are mutually orthogonal whenever dim >= num_classes.
struct Prototypes {
  Tensor audio;   // [C, d_a]
  Tensor visual;  // [C, d_v]
};

Prototypes MakePrototypes(const GenConfig& config);

// Plants events of random class, modality kind and extent into Gaussian
// background noise. An event adds its class prototype to each covered
// segment of the modalities it belongs to. Events of one class never overlap
// or touch, so the planted spans are exactly the runs of the ground truth.
//
// `planted`, when given, receives each video's events; audio-visual events
// carry Modality::kAudioVisual.
Dataset GenerateDataset(const GenConfig& config,
                        std::vector<std::vector<EventSpan>>* planted = nullptr);

enum class FloatEncoding { kDecimal, kHex };

// Dataset file:
//
//   AVVP-DATASET 1
//   videos <n> T <T> C <C> d_a <d_a> d_v <d_v> encoding <dec|hex>
//   video <id>
//   label <C characters in {0,1}>
//   A / V      followed by T rows of C characters in {0,1}
//   audio      followed by T rows of d_a numbers
//   visual     followed by T rows of d_v numbers
//
// Both encodings reproduce every double exactly.
void SaveDataset(std::ostream& out, const Dataset& data,
                 FloatEncoding encoding = FloatEncoding::kDecimal);
void SaveDataset(const std::string& path, const Dataset& data,
                 FloatEncoding encoding = FloatEncoding::kDecimal);
// Raises ParseError with the offending line.
Dataset LoadDataset(std::istream& in);
Dataset LoadDataset(const std::string& path);

}  // namespace avvp

#endif  // AVVP_DATASET_H_
