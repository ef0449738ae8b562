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

#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.h"

namespace avvp {
namespace {

EventSpan Span(std::size_t on, std::size_t off, std::size_t cls = 0) {
  return {cls, on, off, Modality::kAudio};
}

TEST_CASE("binarization") {
  CHECK(Binarize(Tensor({1, 1}, {0.5}), 0.5).at(0, 0) == 1);
  CHECK(Binarize(Tensor({2, 2}), 0.5).count() == 0);
  CHECK(Binarize(Tensor({2, 2}), 0.0).count() == 4);
}

TEST_CASE("run-length merging") {
  const std::vector<std::uint8_t> col = {1, 1, 0, 1};
  CHECK(MergeEvents(col, 2, Modality::kVisual) ==
        std::vector<EventSpan>{{2, 0, 2, Modality::kVisual}, {2, 3, 4, Modality::kVisual}});
  CHECK(MergeEvents(std::vector<std::uint8_t>(5, 0), 0, Modality::kAudio).empty());

  // Painting the spans back reproduces every sequence up to length 8.
  for (std::size_t T = 0; T <= 8; ++T) {
    for (std::uint32_t bits = 0; bits < (1u << T); ++bits) {
      std::vector<std::uint8_t> seq(T);
      int starts = 0;
      for (std::size_t t = 0; t < T; ++t) {
        seq[t] = (bits >> t) & 1u;
        if (seq[t] && (t == 0 || !seq[t - 1])) ++starts;
      }
      const auto spans = MergeEvents(seq, 0, Modality::kAudio);
      std::vector<std::uint8_t> painted(T, 0);
      for (const EventSpan& s : spans)
        for (std::size_t t = s.onset; t < s.offset; ++t) painted[t] = 1;
      CHECK(painted == seq);
      CHECK(static_cast<int>(spans.size()) == starts);
    }
  }
}

TEST_CASE("span IoU") {
  CHECK(SpanIou(Span(2, 5), Span(2, 5)) == 1.0);
  CHECK(SpanIou(Span(0, 2), Span(3, 5)) == 0.0);
  CHECK(SpanIou(Span(0, 2), Span(2, 5)) == 0.0);
  CHECK(SpanIou(Span(0, 2), Span(1, 3)) == 1.0 / 3.0);
}

TEST_CASE("segment F1 counting") {
  CHECK(Counts{3, 0, 0}.F1() == 1.0);
  CHECK(Counts{0, 0, 2}.F1() == 0.0);
  CHECK(Counts{0, 0, 0}.F1() == 1.0);
  CHECK(Counts{2, 1, 1}.F1() == 2.0 / 3.0);

  BinaryGrid gt(3, 2), pred(3, 2);
  gt.set(0, 0, true);
  gt.set(1, 0, true);
  gt.set(2, 1, true);
  pred.set(0, 0, true);
  pred.set(1, 0, true);
  pred.set(1, 1, true);
  CHECK(SegmentCounts(pred, gt) == Counts{2, 1, 1});
}

TEST_CASE("event F1 matching") {
  const std::vector<EventSpan> gt = {Span(1, 4)};
  CHECK(EventF1(gt, gt) == 1.0);
  CHECK(EventF1(std::vector<EventSpan>{Span(0, 2)}, std::vector<EventSpan>{Span(1, 3)}) == 0.0);
  // Both predictions overlap the single ground truth [0, 6) by more than
  // half; only one may be matched.
  const std::vector<EventSpan> one = {Span(0, 6)};
  const std::vector<EventSpan> two = {Span(0, 4), Span(1, 6)};
  CHECK(EventCounts(two, one) == Counts{1, 1, 0});
  CHECK(EventF1(two, one) == 2.0 / 3.0);
  // Classes never match each other.
  CHECK(EventF1(std::vector<EventSpan>{Span(1, 4, 1)}, gt) == 0.0);
  CHECK(EventF1(std::vector<EventSpan>{}, std::vector<EventSpan>{}) == 1.0);
}

TEST_CASE("cell and event counts against brute force on small grids") {
  for (std::size_t T = 1; T <= 4; ++T) {
    for (std::size_t C = 1; C <= 2; ++C) {
      const std::uint64_t n = 1ull << (T * C);
      for (std::uint64_t a = 0; a < n; ++a) {
        const BinaryGrid pred = oracle::FromBits(a, T, C);
        const auto pspans = ExtractEvents(pred, Modality::kAudio);
        const auto pruns = oracle::Runs(oracle::ToGrid(pred));
        for (std::uint64_t b = 0; b < n; ++b) {
          const BinaryGrid gt = oracle::FromBits(b, T, C);
          const oracle::Tally cell = oracle::CellTally(oracle::ToGrid(pred), oracle::ToGrid(gt));
          const oracle::Tally ev = oracle::RunTally(pruns, oracle::Runs(oracle::ToGrid(gt)));
          const Counts sc = SegmentCounts(pred, gt);
          const Counts ec = EventCounts(pspans, ExtractEvents(gt, Modality::kAudio));
          CHECK(sc == Counts{cell.tp, cell.fp, cell.fn});
          CHECK(ec == Counts{ev.tp, ev.fp, ev.fn});
        }
      }
    }
  }
}

SegmentLabels RandomLabels(std::mt19937_64& rng, std::size_t T, std::size_t C) {
  return {oracle::RandomGrid(rng, T, C, 0.35), oracle::RandomGrid(rng, T, C, 0.35)};
}

TEST_CASE("aggregate over videos against a loop reimplementation") {
  std::mt19937_64 rng(7);
  std::vector<VideoMetrics> videos;
  double seg[5] = {}, evt[5] = {};
  const int n = 10;
  for (int i = 0; i < n; ++i) {
    const SegmentLabels pred = RandomLabels(rng, 10, 5), gt = RandomLabels(rng, 10, 5);
    videos.push_back(EvaluateVideo(pred, gt));
    const oracle::TenNumbers s =
        oracle::VideoScores(oracle::ToGrid(pred.audio), oracle::ToGrid(pred.visual),
                            oracle::ToGrid(gt.audio), oracle::ToGrid(gt.visual));
    for (int k = 0; k < 5; ++k) {
      seg[k] += s.seg[k] / n;
      evt[k] += s.evt[k] / n;
    }
    CHECK(SegmentF1(pred, gt, Modality::kAudioVisual) == doctest::Approx(s.seg[2]).epsilon(1e-15));
  }
  const MetricReport r = Aggregate(videos);
  CHECK(r.num_videos == 10);
  for (int k = 0; k < 5; ++k) {
    CHECK(r.segment[k] == doctest::Approx(seg[k]).epsilon(1e-12));
    CHECK(r.event[k] == doctest::Approx(evt[k]).epsilon(1e-12));
  }
  CHECK_THROWS(Aggregate(std::vector<VideoMetrics>{}));
}

TEST_CASE("perfect and opposite videos average to one half") {
  std::mt19937_64 rng(9);
  SegmentLabels gt = RandomLabels(rng, 6, 3);
  gt.audio.set(0, 0, true);
  gt.visual.set(0, 0, true);
  SegmentLabels empty{BinaryGrid(6, 3), BinaryGrid(6, 3)};
  const std::vector<VideoMetrics> v = {EvaluateVideo(gt, gt), EvaluateVideo(empty, gt)};
  const MetricReport r = Aggregate(v);
  CHECK(r.seg(MetricColumn::kAV) == 0.5);
  CHECK(r.evt(MetricColumn::kEventAV) == 0.5);
  const MetricReport perfect = Aggregate(std::vector<VideoMetrics>{v[0]});
  for (int k = 0; k < 5; ++k) {
    CHECK(perfect.segment[k] == 1.0);
    CHECK(perfect.event[k] == 1.0);
  }
}

TEST_CASE("report formatting") {
  MetricReport r;
  r.segment = {1.0, 0.5, 0.25, 0.125, 0.0};
  r.event = {0.1, 0.2, 0.3, 0.4, 0.5};
  r.num_videos = 2;
  CHECK(FormatReportCsv(r) ==
        "level,A,V,AV,Type@AV,Event@AV\n"
        "segment,100.0000,50.0000,25.0000,12.5000,0.0000\n"
        "event,10.0000,20.0000,30.0000,40.0000,50.0000\n");
  const std::string table = FormatReportTable(r);
  CHECK(table.find("Type@AV") != std::string::npos);
  CHECK(table.find("100.0") != std::string::npos);
}

TEST_CASE("label files round-trip and reject malformed input") {
  std::mt19937_64 rng(11);
  std::vector<LabeledVideo> videos = {{"a", RandomLabels(rng, 4, 3)},
                                      {"b", RandomLabels(rng, 4, 3)}};
  std::stringstream buf;
  WriteLabelFile(buf, videos);
  const std::string text = buf.str();
  const auto back = ReadLabelFile(buf);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "a");
  CHECK(back[1].labels == videos[1].labels);

  std::istringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(ReadLabelFile(truncated), ParseError);
  std::istringstream wrong_version("AVVP-LABELS 9\n");
  CHECK_THROWS_AS(ReadLabelFile(wrong_version), ParseError);

  // An AV grid that is not A AND V is rejected, with the line number.
  std::string bad = text;
  const std::size_t av = bad.find("AV\n");
  bad[av + 3] = bad[av + 3] == '0' ? '1' : '0';
  std::istringstream tampered(bad);
  try {
    ReadLabelFile(tampered);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() > 0);
  }
}

}  // namespace
}  // namespace avvp
