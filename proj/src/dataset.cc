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

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <random>

#include "line_reader.h"

namespace avvp {
namespace {

constexpr const char* kDatasetMagic = "AVVP-DATASET";
constexpr int kDatasetVersion = 1;

// Stream tags keep prototype and per-video draws independent of each other.
constexpr std::uint32_t kPrototypeStream = 0x70726f74;
constexpr std::uint32_t kVideoStream = 0x76696465;
constexpr int kMaxPlacementAttempts = 64;

std::mt19937_64 MakeRng(std::uint64_t seed, std::uint32_t stream,
                        std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream,
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Tensor PrototypeRows(std::size_t classes, std::size_t dim, double signal,
                     std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor out({classes, dim});
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> v(dim);
    double norm = 0.0;
    while (norm < 1e-6) {
      for (double& x : v) x = normal(rng);
      // Gram-Schmidt against earlier rows while an orthogonal direction
      // remains.
      if (c < dim) {
        for (std::size_t p = 0; p < c; ++p) {
          double dot = 0.0;
          for (std::size_t j = 0; j < dim; ++j) dot += v[j] * out.at(p, j);
          const double scale = dot / (signal * signal);
          for (std::size_t j = 0; j < dim; ++j) v[j] -= scale * out.at(p, j);
        }
      }
      norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
    }
    for (std::size_t j = 0; j < dim; ++j) out.at(c, j) = signal * v[j] / norm;
  }
  return out;
}

bool Conflicts(const std::vector<EventSpan>& events, const EventSpan& e) {
  return std::any_of(events.begin(), events.end(), [&](const EventSpan& o) {
    return o.cls == e.cls && e.onset <= o.offset && o.onset <= e.offset;
  });
}

std::string FormatDouble(double v, FloatEncoding enc) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), enc == FloatEncoding::kHex ? "%a" : "%.17g",
                v);
  return buf;
}

double ParseDouble(const internal::LineReader& reader, const std::string& tok) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || errno == ERANGE || !std::isfinite(v)) {
    reader.Fail("invalid number '" + tok + "'");
  }
  return v;
}

void WriteGrid(std::ostream& out, const char* tag, const BinaryGrid& g) {
  out << tag << '\n';
  for (std::size_t t = 0; t < g.rows(); ++t) {
    for (std::size_t c = 0; c < g.cols(); ++c) out << (g.at(t, c) ? '1' : '0');
    out << '\n';
  }
}

std::vector<std::uint8_t> ParseBits(const internal::LineReader& reader,
                                    const std::string& s, std::size_t n) {
  if (s.size() != n) {
    reader.Fail("expected " + std::to_string(n) + " binary cells, got " +
                std::to_string(s.size()));
  }
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (s[i] != '0' && s[i] != '1') {
      reader.Fail(std::string("invalid binary cell '") + s[i] + "'");
    }
    out[i] = s[i] == '1';
  }
  return out;
}

BinaryGrid ReadGrid(internal::LineReader& reader, const char* tag,
                    std::size_t rows, std::size_t cols) {
  reader.Expect(tag, 0);
  BinaryGrid g(rows, cols);
  for (std::size_t t = 0; t < rows; ++t) {
    const auto bits = ParseBits(reader, reader.RawLine("grid row"), cols);
    for (std::size_t c = 0; c < cols; ++c) g.set(t, c, bits[c]);
  }
  return g;
}

Tensor ReadMatrix(internal::LineReader& reader, const char* tag,
                  std::size_t rows, std::size_t cols) {
  reader.Expect(tag, 0);
  Tensor m({rows, cols});
  for (std::size_t t = 0; t < rows; ++t) {
    const auto toks = reader.Tokens("feature row");
    if (toks.size() != cols) {
      reader.Fail("feature row has " + std::to_string(toks.size()) +
                  " values, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) m.at(t, j) = ParseDouble(reader, toks[j]);
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> VideoLabelFromSegments(const SegmentLabels& gt) {
  std::vector<std::uint8_t> label(gt.audio.cols(), 0);
  for (std::size_t t = 0; t < gt.audio.rows(); ++t)
    for (std::size_t c = 0; c < gt.audio.cols(); ++c)
      label[c] |= gt.audio.at(t, c) | gt.visual.at(t, c);
  return label;
}

void ValidateDataset(const Dataset& data) {
  auto fail = [](const std::string& id, const std::string& what) {
    throw std::invalid_argument("video '" + id + "': " + what);
  };
  for (const VideoSample& v : data.videos) {
    if (v.audio.shape() != Shape{data.num_segments, data.audio_dim}) {
      fail(v.id, "audio features have shape " + ShapeToString(v.audio.shape()));
    }
    if (v.visual.shape() != Shape{data.num_segments, data.visual_dim}) {
      fail(v.id, "visual features have shape " + ShapeToString(v.visual.shape()));
    }
    if (v.video_label.size() != data.num_classes) fail(v.id, "label size mismatch");
    for (const BinaryGrid* g : {&v.segment_gt.audio, &v.segment_gt.visual}) {
      if (g->rows() != data.num_segments || g->cols() != data.num_classes) {
        fail(v.id, "segment ground truth shape mismatch");
      }
    }
    if (!v.audio.AllFinite() || !v.visual.AllFinite()) {
      fail(v.id, "non-finite feature value");
    }
  }
}

std::pair<Dataset, Dataset> SplitDataset(const Dataset& data,
                                         std::size_t n_tail) {
  if (n_tail > data.videos.size()) {
    throw std::invalid_argument("SplitDataset: tail larger than dataset");
  }
  Dataset head = data, tail = data;
  const auto cut = data.videos.begin() +
                   static_cast<std::ptrdiff_t>(data.videos.size() - n_tail);
  head.videos.assign(data.videos.begin(), cut);
  tail.videos.assign(cut, data.videos.end());
  return {std::move(head), std::move(tail)};
}

void GenConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("GenConfig: ") + what);
  };
  require(n_videos >= 1, "n_videos must be at least 1");
  require(num_segments >= 1, "T must be at least 1");
  require(num_classes >= 1, "C must be at least 1");
  require(audio_dim >= 1 && visual_dim >= 1,
          "class prototypes need feature dims of at least 1");
  require(min_events <= max_events, "min_events exceeds max_events");
  require(min_span >= 1 && min_span <= max_span, "bad span length range");
  require(max_span <= num_segments, "max_span exceeds the number of segments");
  require(mix.audio_only >= 0 && mix.visual_only >= 0 && mix.audio_visual >= 0,
          "mixture weights must be non-negative");
  require(std::abs(mix.audio_only + mix.visual_only + mix.audio_visual - 1.0) <
              1e-9,
          "mixture weights must sum to 1");
  require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be >= 0");
  require(signal > 0.0 && std::isfinite(signal), "signal must be > 0");
}

Prototypes MakePrototypes(const GenConfig& config) {
  config.Validate();
  auto rng = MakeRng(config.seed, kPrototypeStream, 0);
  Prototypes p;
  p.audio = PrototypeRows(config.num_classes, config.audio_dim, config.signal, rng);
  p.visual =
      PrototypeRows(config.num_classes, config.visual_dim, config.signal, rng);
  return p;
}

Dataset GenerateDataset(const GenConfig& config,
                        std::vector<std::vector<EventSpan>>* planted) {
  const Prototypes protos = MakePrototypes(config);
  const std::size_t T = config.num_segments, C = config.num_classes;
  Dataset data;
  data.num_segments = T;
  data.num_classes = C;
  data.audio_dim = config.audio_dim;
  data.visual_dim = config.visual_dim;
  if (planted) planted->assign(config.n_videos, {});

  const std::size_t max_span = std::min(config.max_span, T);
  const std::size_t min_span = std::min(config.min_span, max_span);
  for (std::size_t i = 0; i < config.n_videos; ++i) {
    auto rng = MakeRng(config.seed, kVideoStream, i);
    std::uniform_int_distribution<std::size_t> n_events_dist(config.min_events,
                                                             config.max_events);
    std::uniform_int_distribution<std::size_t> class_dist(0, C - 1);
    std::uniform_int_distribution<std::size_t> len_dist(min_span, max_span);
    std::discrete_distribution<int> kind_dist(
        {config.mix.audio_only, config.mix.visual_only, config.mix.audio_visual});

    std::vector<EventSpan> events;
    const std::size_t n_events = n_events_dist(rng);
    for (std::size_t e = 0; e < n_events; ++e) {
      for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
        EventSpan span;
        span.cls = class_dist(rng);
        span.modality = static_cast<Modality>(kind_dist(rng));
        const std::size_t len = len_dist(rng);
        span.onset = std::uniform_int_distribution<std::size_t>(0, T - len)(rng);
        span.offset = span.onset + len;
        if (!Conflicts(events, span)) {
          events.push_back(span);
          break;
        }
      }
    }

    VideoSample v;
    char id[32];
    std::snprintf(id, sizeof(id), "vid%05zu", i);
    v.id = id;
    v.segment_gt.audio = BinaryGrid(T, C);
    v.segment_gt.visual = BinaryGrid(T, C);
    for (const EventSpan& e : events) {
      const bool in_audio = e.modality != Modality::kVisual;
      const bool in_visual = e.modality != Modality::kAudio;
      for (std::size_t t = e.onset; t < e.offset; ++t) {
        if (in_audio) v.segment_gt.audio.set(t, e.cls, true);
        if (in_visual) v.segment_gt.visual.set(t, e.cls, true);
      }
    }
    v.video_label = VideoLabelFromSegments(v.segment_gt);

    std::normal_distribution<double> normal(0.0, 1.0);
    auto render = [&](const BinaryGrid& gt, const Tensor& proto, std::size_t dim) {
      Tensor f({T, dim});
      for (double& x : f.values()) x = config.sigma * normal(rng);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < C; ++c)
          if (gt.at(t, c))
            for (std::size_t j = 0; j < dim; ++j) f.at(t, j) += proto.at(c, j);
      return f;
    };
    v.audio = render(v.segment_gt.audio, protos.audio, config.audio_dim);
    v.visual = render(v.segment_gt.visual, protos.visual, config.visual_dim);

    if (planted) (*planted)[i] = std::move(events);
    data.videos.push_back(std::move(v));
  }
  return data;
}

void SaveDataset(std::ostream& out, const Dataset& data, FloatEncoding encoding) {
  ValidateDataset(data);
  out << kDatasetMagic << ' ' << kDatasetVersion << '\n';
  out << "videos " << data.videos.size() << " T " << data.num_segments << " C "
      << data.num_classes << " d_a " << data.audio_dim << " d_v "
      << data.visual_dim << " encoding "
      << (encoding == FloatEncoding::kHex ? "hex" : "dec") << '\n';
  auto write_matrix = [&](const char* tag, const Tensor& m) {
    out << tag << '\n';
    for (std::size_t t = 0; t < m.rows(); ++t) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) out << ' ';
        out << FormatDouble(m.at(t, j), encoding);
      }
      out << '\n';
    }
  };
  for (const VideoSample& v : data.videos) {
    out << "video " << v.id << '\n' << "label ";
    for (std::uint8_t b : v.video_label) out << (b ? '1' : '0');
    out << '\n';
    WriteGrid(out, "A", v.segment_gt.audio);
    WriteGrid(out, "V", v.segment_gt.visual);
    write_matrix("audio", v.audio);
    write_matrix("visual", v.visual);
  }
}

void SaveDataset(const std::string& path, const Dataset& data,
                 FloatEncoding encoding) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  SaveDataset(out, data, encoding);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Dataset LoadDataset(std::istream& in) {
  internal::LineReader reader(in);
  const auto magic = reader.Tokens("dataset header");
  if (magic.size() != 2 || magic[0] != kDatasetMagic) {
    reader.Fail("not an AVVP dataset file");
  }
  if (magic[1] != std::to_string(kDatasetVersion)) {
    reader.Fail("unsupported dataset version " + magic[1] + " (expected " +
                std::to_string(kDatasetVersion) + ")");
  }
  const auto dims = reader.Tokens("dimension line");
  const char* keys[] = {"videos", "T", "C", "d_a", "d_v", "encoding"};
  if (dims.size() != 12) reader.Fail("malformed dimension line");
  for (std::size_t k = 0; k < 6; ++k) {
    if (dims[2 * k] != keys[k]) {
      reader.Fail(std::string("expected '") + keys[k] + "' in dimension line");
    }
  }
  Dataset data;
  const std::size_t n = reader.ParseCount(dims[1], "video count");
  data.num_segments = reader.ParseCount(dims[3], "T");
  data.num_classes = reader.ParseCount(dims[5], "C");
  data.audio_dim = reader.ParseCount(dims[7], "d_a");
  data.visual_dim = reader.ParseCount(dims[9], "d_v");
  if (dims[11] != "dec" && dims[11] != "hex") {
    reader.Fail("unknown float encoding '" + dims[11] + "'");
  }
  if (data.num_segments == 0 || data.num_classes == 0 || data.audio_dim == 0 ||
      data.visual_dim == 0) {
    reader.Fail("dimensions must be positive");
  }
  const std::size_t T = data.num_segments, C = data.num_classes;
  data.videos.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    VideoSample v;
    v.id = reader.Expect("video", 1)[0];
    v.video_label = ParseBits(reader, reader.Expect("label", 1)[0], C);
    v.segment_gt.audio = ReadGrid(reader, "A", T, C);
    v.segment_gt.visual = ReadGrid(reader, "V", T, C);
    v.audio = ReadMatrix(reader, "audio", T, data.audio_dim);
    v.visual = ReadMatrix(reader, "visual", T, data.visual_dim);
    data.videos.push_back(std::move(v));
  }
  if (!reader.AtEnd()) reader.Fail("trailing content after last video", reader.line() + 1);
  return data;
}

Dataset LoadDataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return LoadDataset(in);
}

}  // namespace avvp
