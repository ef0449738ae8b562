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
#include "avvp/dataset.h"

#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "doctest.h"
#include "oracles.h"

namespace avvp {
namespace {

std::string Serialize(const Dataset& d, FloatEncoding enc = FloatEncoding::kDecimal) {
  std::ostringstream out;
  SaveDataset(out, d, enc);
  return out.str();
}

GenConfig Small(std::uint64_t seed) {
  GenConfig g;
  g.n_videos = 12;
  g.seed = seed;
  return g;
}

TEST_CASE("a single noiseless audio-only event") {
  GenConfig g;
  g.n_videos = 5;
  g.min_events = g.max_events = 1;
  g.mix = {1.0, 0.0, 0.0};
  g.sigma = 0.0;
  g.seed = 4;
  std::vector<std::vector<EventSpan>> planted;
  const Dataset d = GenerateDataset(g, &planted);
  const Prototypes proto = MakePrototypes(g);
  for (std::size_t i = 0; i < d.videos.size(); ++i) {
    const VideoSample& v = d.videos[i];
    REQUIRE(planted[i].size() == 1);
    const EventSpan e = planted[i][0];
    CHECK(e.modality == Modality::kAudio);
    CHECK(v.segment_gt.visual.count() == 0);
    CHECK(v.segment_gt.audio.count() == e.length());
    for (double x : v.visual.values()) CHECK(x == 0.0);
    for (std::size_t t = 0; t < g.num_segments; ++t) {
      const bool inside = t >= e.onset && t < e.offset;
      for (std::size_t j = 0; j < g.audio_dim; ++j) {
        CHECK(v.audio.at(t, j) == (inside ? proto.audio.at(e.cls, j) : 0.0));
      }
    }
  }
}

TEST_CASE("prototypes are orthogonal with the configured norm") {
  GenConfig g;
  g.signal = 1.7;
  const Prototypes p = MakePrototypes(g);
  for (std::size_t a = 0; a < g.num_classes; ++a)
    for (std::size_t b = 0; b < g.num_classes; ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.audio_dim; ++j) dot += p.audio.at(a, j) * p.audio.at(b, j);
      CHECK(dot == doctest::Approx(a == b ? 1.7 * 1.7 : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("planted events are exactly the ground-truth runs") {
  std::vector<std::vector<EventSpan>> planted;
  const Dataset d = GenerateDataset(Small(2), &planted);
  for (std::size_t i = 0; i < d.videos.size(); ++i) {
    const VideoSample& v = d.videos[i];
    std::set<std::tuple<std::size_t, std::size_t, std::size_t, int>> want, got;
    for (const EventSpan& e : planted[i]) {
      if (e.modality != Modality::kVisual) want.insert({e.cls, e.onset, e.offset, 0});
      if (e.modality != Modality::kAudio) want.insert({e.cls, e.onset, e.offset, 1});
    }
    for (const auto& r : oracle::Runs(oracle::ToGrid(v.segment_gt.audio)))
      got.insert({r.cls, r.begin, r.end, 0});
    for (const auto& r : oracle::Runs(oracle::ToGrid(v.segment_gt.visual)))
      got.insert({r.cls, r.begin, r.end, 1});
    CHECK(got == want);
    CHECK(v.video_label == VideoLabelFromSegments(v.segment_gt));
  }
}

TEST_CASE("generation is reproducible from the seed") {
  CHECK(Serialize(GenerateDataset(Small(9))) == Serialize(GenerateDataset(Small(9))));
  CHECK(Serialize(GenerateDataset(Small(9))) != Serialize(GenerateDataset(Small(10))));
}

TEST_CASE("files round-trip exactly in both encodings") {
  const Dataset d = GenerateDataset(Small(5));
  for (FloatEncoding enc : {FloatEncoding::kDecimal, FloatEncoding::kHex}) {
    std::istringstream in(Serialize(d, enc));
    CHECK(LoadDataset(in) == d);
  }
}

TEST_CASE("malformed files raise parse errors with a line number") {
  const std::string text = Serialize(GenerateDataset(Small(6)));
  std::istringstream truncated(text.substr(0, text.size() * 2 / 3));
  try {
    LoadDataset(truncated);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() > 0);
  }
  std::string wrong = text;
  wrong.replace(wrong.find("AVVP-DATASET 1"), 14, "AVVP-DATASET 2");
  std::istringstream version(wrong);
  CHECK_THROWS_AS(LoadDataset(version), ParseError);
  std::istringstream garbage("hello\n");
  CHECK_THROWS_AS(LoadDataset(garbage), ParseError);
}

TEST_CASE("wide features are supported") {
  GenConfig g = Small(3);
  g.n_videos = 2;
  g.audio_dim = 768;
  g.visual_dim = 512;
  const Dataset d = GenerateDataset(g);
  CHECK(d.videos[1].audio.cols() == 768);
  std::istringstream in(Serialize(d, FloatEncoding::kHex));
  CHECK(LoadDataset(in) == d);
}

TEST_CASE("configuration validation and splitting") {
  GenConfig g = Small(1);
  g.max_span = g.num_segments + 1;
  CHECK_THROWS_AS(g.Validate(), std::invalid_argument);
  g = Small(1);
  g.mix = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(g.Validate(), std::invalid_argument);
  g = Small(1);
  g.sigma = -1.0;
  CHECK_THROWS_AS(g.Validate(), std::invalid_argument);

  const Dataset d = GenerateDataset(Small(8));
  const auto [head, tail] = SplitDataset(d, 4);
  CHECK(head.videos.size() == 8);
  CHECK(tail.videos.size() == 4);
  CHECK(tail.videos.front() == d.videos[8]);
  CHECK(tail.num_classes == d.num_classes);
}

}  // namespace
}  // namespace avvp
