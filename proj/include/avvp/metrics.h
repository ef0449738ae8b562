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
#ifndef AVVP_METRICS_H_
#define AVVP_METRICS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "avvp/tensor.h"

namespace avvp {

enum class Modality { kAudio = 0, kVisual = 1, kAudioVisual = 2 };

const char* ModalityName(Modality m);

// T x C matrix of 0/1 cells (segments by classes).
class BinaryGrid {
 public:
  BinaryGrid() = default;
  BinaryGrid(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), cells_(rows * cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t at(std::size_t t, std::size_t c) const {
    return cells_[t * cols_ + c];
  }
  void set(std::size_t t, std::size_t c, bool on) {
    cells_[t * cols_ + c] = on ? 1 : 0;
  }
  std::size_t count() const;
  std::vector<std::uint8_t> column(std::size_t c) const;
  std::span<const std::uint8_t> cells() const { return cells_; }

  // Elementwise AND; shapes must agree.
  static BinaryGrid And(const BinaryGrid& a, const BinaryGrid& b);

  friend bool operator==(const BinaryGrid&, const BinaryGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Per-segment labels for both modalities. The audio-visual grid is always
// derived as audio AND visual.
struct SegmentLabels {
  BinaryGrid audio;
  BinaryGrid visual;

  BinaryGrid audio_visual() const { return BinaryGrid::And(audio, visual); }
  BinaryGrid of(Modality m) const;

  friend bool operator==(const SegmentLabels&, const SegmentLabels&) = default;
};

// Entry is 1 iff prob >= threshold.
BinaryGrid Binarize(const Tensor& probs, double threshold = 0.5);

// Half-open segment interval [onset, offset) of one class in one modality.
struct EventSpan {
  std::size_t cls = 0;
  std::size_t onset = 0;
  std::size_t offset = 0;
  Modality modality = Modality::kAudio;

  std::size_t length() const { return offset - onset; }
  friend bool operator==(const EventSpan&, const EventSpan&) = default;
};

// Maximal runs of ones in `column` as spans.
std::vector<EventSpan> MergeEvents(std::span<const std::uint8_t> column,
                                   std::size_t cls, Modality modality);
// MergeEvents applied to every class column of `grid`, in class order.
std::vector<EventSpan> ExtractEvents(const BinaryGrid& grid, Modality modality);

double SpanIou(const EventSpan& a, const EventSpan& b);

struct Counts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  // 2TP / (2TP + FP + FN); a video with nothing predicted and nothing to
  // find scores 1.
  double F1() const;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend Counts operator+(Counts a, const Counts& b) { return a += b; }
  friend bool operator==(const Counts&, const Counts&) = default;
};

// Cell-wise counts over all (t, c).
Counts SegmentCounts(const BinaryGrid& pred, const BinaryGrid& gt);
double SegmentF1(const SegmentLabels& pred, const SegmentLabels& gt,
                 Modality type);

// Greedy one-to-one matching in descending IoU order. Only spans with the
// same class and modality are compared, and a pair counts only when its IoU
// is strictly above `iou_threshold`.
Counts EventCounts(std::span<const EventSpan> pred,
                   std::span<const EventSpan> gt, double iou_threshold = 0.5);
double EventF1(std::span<const EventSpan> pred, std::span<const EventSpan> gt,
               double iou_threshold = 0.5);

// Raw counts for one video, indexed by Modality.
struct VideoMetrics {
  std::array<Counts, 3> segment;
  std::array<Counts, 3> event;
};

VideoMetrics EvaluateVideo(const SegmentLabels& pred, const SegmentLabels& gt,
                           double iou_threshold = 0.5);

// Columns of a report row, in the order they are printed.
enum class MetricColumn { kA = 0, kV, kAV, kTypeAV, kEventAV };
inline constexpr std::size_t kNumMetricColumns = 5;

struct MetricReport {
  std::array<double, kNumMetricColumns> segment{};
  std::array<double, kNumMetricColumns> event{};
  std::size_t num_videos = 0;

  double seg(MetricColumn c) const { return segment[static_cast<int>(c)]; }
  double evt(MetricColumn c) const { return event[static_cast<int>(c)]; }
};

// Averages per-video F1 over videos. Type@AV is the mean of the A, V and AV
// columns; Event@AV is the per-video F1 of pooled audio and visual counts.
MetricReport Aggregate(std::span<const VideoMetrics> videos);

// Aligned table with values in percent.
std::string FormatReportTable(const MetricReport& report);
// Header line plus two rows (segment, event), values in percent.
std::string FormatReportCsv(const MetricReport& report);

// Label files: one record per video with A, V and AV grids.
//
//   AVVP-LABELS 1
//   video <id> <T> <C>
//   A
//   <T rows of C characters in {0,1}>
//   V
//   ...
//   AV
//   ...
struct LabeledVideo {
  std::string id;
  SegmentLabels labels;
};

void WriteLabelFile(std::ostream& out, std::span<const LabeledVideo> videos);
// Raises ParseError. The AV grid in the file must equal A AND V.
std::vector<LabeledVideo> ReadLabelFile(std::istream& in);
void WriteLabelFile(const std::string& path,
                    std::span<const LabeledVideo> videos);
std::vector<LabeledVideo> ReadLabelFile(const std::string& path);

// Malformed input file. `line` is 1-based; 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace avvp

#endif  // AVVP_METRICS_H_
