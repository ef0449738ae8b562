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
#include "avvp/metrics.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "line_reader.h"

namespace avvp {

const char* ModalityName(Modality m) {
  switch (m) {
    case Modality::kAudio: return "audio";
    case Modality::kVisual: return "visual";
    case Modality::kAudioVisual: return "audio-visual";
  }
  return "?";
}

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                              : what),
      line_(line) {}

std::size_t BinaryGrid::count() const {
  return static_cast<std::size_t>(
      std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

std::vector<std::uint8_t> BinaryGrid::column(std::size_t c) const {
  std::vector<std::uint8_t> out(rows_);
  for (std::size_t t = 0; t < rows_; ++t) out[t] = at(t, c);
  return out;
}

BinaryGrid BinaryGrid::And(const BinaryGrid& a, const BinaryGrid& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) {
    throw ShapeError("BinaryGrid::And: incompatible shapes [" +
                     std::to_string(a.rows_) + ", " + std::to_string(a.cols_) +
                     "] and [" + std::to_string(b.rows_) + ", " +
                     std::to_string(b.cols_) + "]");
  }
  BinaryGrid out(a.rows_, a.cols_);
  for (std::size_t i = 0; i < a.cells_.size(); ++i) {
    out.cells_[i] = a.cells_[i] & b.cells_[i];
  }
  return out;
}

BinaryGrid SegmentLabels::of(Modality m) const {
  switch (m) {
    case Modality::kAudio: return audio;
    case Modality::kVisual: return visual;
    case Modality::kAudioVisual: return audio_visual();
  }
  return {};
}

BinaryGrid Binarize(const Tensor& probs, double threshold) {
  BinaryGrid out(probs.rows(), probs.cols());
  for (std::size_t t = 0; t < probs.rows(); ++t)
    for (std::size_t c = 0; c < probs.cols(); ++c)
      out.set(t, c, probs.at(t, c) >= threshold);
  return out;
}

std::vector<EventSpan> MergeEvents(std::span<const std::uint8_t> column,
                                   std::size_t cls, Modality modality) {
  std::vector<EventSpan> spans;
  std::size_t t = 0;
  while (t < column.size()) {
    if (!column[t]) {
      ++t;
      continue;
    }
    const std::size_t onset = t;
    while (t < column.size() && column[t]) ++t;
    spans.push_back({cls, onset, t, modality});
  }
  return spans;
}

std::vector<EventSpan> ExtractEvents(const BinaryGrid& grid, Modality modality) {
  std::vector<EventSpan> out;
  for (std::size_t c = 0; c < grid.cols(); ++c) {
    auto spans = MergeEvents(grid.column(c), c, modality);
    out.insert(out.end(), spans.begin(), spans.end());
  }
  return out;
}

double SpanIou(const EventSpan& a, const EventSpan& b) {
  const std::size_t lo = std::max(a.onset, b.onset);
  const std::size_t hi = std::min(a.offset, b.offset);
  const std::size_t inter = hi > lo ? hi - lo : 0;
  const std::size_t uni = a.length() + b.length() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double Counts::F1() const {
  const std::int64_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

Counts SegmentCounts(const BinaryGrid& pred, const BinaryGrid& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw ShapeError("SegmentCounts: prediction and ground truth differ in shape");
  }
  Counts n;
  const auto p = pred.cells();
  const auto g = gt.cells();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && g[i]) ++n.tp;
    else if (p[i]) ++n.fp;
    else if (g[i]) ++n.fn;
  }
  return n;
}

double SegmentF1(const SegmentLabels& pred, const SegmentLabels& gt,
                 Modality type) {
  return SegmentCounts(pred.of(type), gt.of(type)).F1();
}

Counts EventCounts(std::span<const EventSpan> pred,
                   std::span<const EventSpan> gt, double iou_threshold) {
  struct Candidate {
    double iou;
    std::size_t p, g;
  };
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (pred[p].cls != gt[g].cls || pred[p].modality != gt[g].modality) {
        continue;
      }
      const double iou = SpanIou(pred[p], gt[g]);
      if (iou > iou_threshold) candidates.push_back({iou, p, g});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.iou != b.iou) return a.iou > b.iou;
              if (a.p != b.p) return a.p < b.p;
              return a.g < b.g;
            });
  std::vector<bool> pred_used(pred.size()), gt_used(gt.size());
  Counts n;
  for (const Candidate& c : candidates) {
    if (pred_used[c.p] || gt_used[c.g]) continue;
    pred_used[c.p] = gt_used[c.g] = true;
    ++n.tp;
  }
  n.fp = static_cast<std::int64_t>(pred.size()) - n.tp;
  n.fn = static_cast<std::int64_t>(gt.size()) - n.tp;
  return n;
}

double EventF1(std::span<const EventSpan> pred, std::span<const EventSpan> gt,
               double iou_threshold) {
  return EventCounts(pred, gt, iou_threshold).F1();
}

VideoMetrics EvaluateVideo(const SegmentLabels& pred, const SegmentLabels& gt,
                           double iou_threshold) {
  VideoMetrics vm;
  for (Modality m : {Modality::kAudio, Modality::kVisual, Modality::kAudioVisual}) {
    const BinaryGrid p = pred.of(m);
    const BinaryGrid g = gt.of(m);
    const auto i = static_cast<std::size_t>(m);
    vm.segment[i] = SegmentCounts(p, g);
    const auto pe = ExtractEvents(p, m);
    const auto ge = ExtractEvents(g, m);
    vm.event[i] = EventCounts(pe, ge, iou_threshold);
  }
  return vm;
}

MetricReport Aggregate(std::span<const VideoMetrics> videos) {
  if (videos.empty()) {
    throw std::invalid_argument("Aggregate: no videos to evaluate");
  }
  constexpr auto kA = static_cast<std::size_t>(Modality::kAudio);
  constexpr auto kV = static_cast<std::size_t>(Modality::kVisual);
  MetricReport r;
  r.num_videos = videos.size();
  auto fold = [&](const std::array<Counts, 3>& counts,
                  std::array<double, kNumMetricColumns>& row) {
    for (std::size_t m = 0; m < 3; ++m) row[m] += counts[m].F1();
    row[4] += (counts[kA] + counts[kV]).F1();
  };
  for (const VideoMetrics& vm : videos) {
    fold(vm.segment, r.segment);
    fold(vm.event, r.event);
  }
  const double n = static_cast<double>(videos.size());
  for (auto* row : {&r.segment, &r.event}) {
    for (double& v : *row) v /= n;
    (*row)[3] = ((*row)[0] + (*row)[1] + (*row)[2]) / 3.0;
  }
  return r;
}

namespace {

constexpr const char* kColumnNames[kNumMetricColumns] = {"A", "V", "AV",
                                                         "Type@AV", "Event@AV"};

}  // namespace

std::string FormatReportTable(const MetricReport& report) {
  std::ostringstream os;
  char buf[64];
  os << "level   ";
  for (const char* name : kColumnNames) {
    std::snprintf(buf, sizeof(buf), " %9s", name);
    os << buf;
  }
  os << '\n';
  auto row = [&](const char* level, const std::array<double, 5>& vals) {
    std::snprintf(buf, sizeof(buf), "%-8s", level);
    os << buf;
    for (double v : vals) {
      std::snprintf(buf, sizeof(buf), " %9.1f", 100.0 * v);
      os << buf;
    }
    os << '\n';
  };
  row("segment", report.segment);
  row("event", report.event);
  return os.str();
}

std::string FormatReportCsv(const MetricReport& report) {
  std::ostringstream os;
  os << "level";
  for (const char* name : kColumnNames) os << ',' << name;
  os << '\n';
  char buf[32];
  auto row = [&](const char* level, const std::array<double, 5>& vals) {
    os << level;
    for (double v : vals) {
      std::snprintf(buf, sizeof(buf), ",%.4f", 100.0 * v);
      os << buf;
    }
    os << '\n';
  };
  row("segment", report.segment);
  row("event", report.event);
  return os.str();
}

namespace {

constexpr const char* kLabelMagic = "AVVP-LABELS";
constexpr int kLabelVersion = 1;

void WriteGrid(std::ostream& out, const char* tag, const BinaryGrid& g) {
  out << tag << '\n';
  for (std::size_t t = 0; t < g.rows(); ++t) {
    for (std::size_t c = 0; c < g.cols(); ++c) out << (g.at(t, c) ? '1' : '0');
    out << '\n';
  }
}

BinaryGrid ReadGrid(internal::LineReader& reader, const std::string& tag,
                    std::size_t rows, std::size_t cols) {
  reader.Expect(tag, 0);
  BinaryGrid g(rows, cols);
  for (std::size_t t = 0; t < rows; ++t) {
    const std::string line = reader.RawLine("grid row");
    if (line.size() != cols) {
      reader.Fail("grid row has " + std::to_string(line.size()) +
                  " cells, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (line[c] != '0' && line[c] != '1') {
        reader.Fail(std::string("invalid grid cell '") + line[c] + "'");
      }
      g.set(t, c, line[c] == '1');
    }
  }
  return g;
}

}  // namespace

void WriteLabelFile(std::ostream& out, std::span<const LabeledVideo> videos) {
  out << kLabelMagic << ' ' << kLabelVersion << '\n';
  for (const LabeledVideo& v : videos) {
    out << "video " << v.id << ' ' << v.labels.audio.rows() << ' '
        << v.labels.audio.cols() << '\n';
    WriteGrid(out, "A", v.labels.audio);
    WriteGrid(out, "V", v.labels.visual);
    WriteGrid(out, "AV", v.labels.audio_visual());
  }
}

std::vector<LabeledVideo> ReadLabelFile(std::istream& in) {
  internal::LineReader reader(in);
  const auto header = reader.Expect(kLabelMagic, 1);
  if (reader.ParseCount(header[0], "version") != kLabelVersion) {
    reader.Fail("unsupported label file version " + header[0]);
  }
  std::vector<LabeledVideo> videos;
  while (!reader.AtEnd()) {
    const auto rec = reader.Expect("video", 3);
    LabeledVideo v;
    v.id = rec[0];
    const std::size_t rows = reader.ParseCount(rec[1], "segment count");
    const std::size_t cols = reader.ParseCount(rec[2], "class count");
    v.labels.audio = ReadGrid(reader, "A", rows, cols);
    v.labels.visual = ReadGrid(reader, "V", rows, cols);
    const BinaryGrid av = ReadGrid(reader, "AV", rows, cols);
    if (!(av == v.labels.audio_visual())) {
      reader.Fail("AV grid of video '" + v.id + "' is not A AND V");
    }
    videos.push_back(std::move(v));
  }
  return videos;
}

void WriteLabelFile(const std::string& path,
                    std::span<const LabeledVideo> videos) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  WriteLabelFile(out, videos);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<LabeledVideo> ReadLabelFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return ReadLabelFile(in);
}

}  // namespace avvp
