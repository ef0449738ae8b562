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
#include "avvp/checkpoint.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace avvp {
namespace {

constexpr char kMagic[8] = {'A', 'V', 'V', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void U32(std::uint32_t v) { Bytes<4>(v); }
  void U64(std::uint64_t v) { Bytes<8>(v); }
  void F64(double v) { Bytes<8>(std::bit_cast<std::uint64_t>(v)); }
  void Raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  template <int N>
  void Bytes(std::uint64_t v) {
    std::array<char, N> buf;
    for (int i = 0; i < N; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf.data(), N);
  }

  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t U32(const char* what) {
    return static_cast<std::uint32_t>(Bytes<4>(what));
  }
  std::uint64_t U64(const char* what) { return Bytes<8>(what); }
  double F64(const char* what) { return std::bit_cast<double>(Bytes<8>(what)); }
  void Raw(char* p, std::size_t n, const char* what) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) Truncated(what);
    offset_ += n;
  }
  std::size_t offset() const { return offset_; }

 private:
  template <int N>
  std::uint64_t Bytes(const char* what) {
    std::array<unsigned char, N> buf;
    in_.read(reinterpret_cast<char*>(buf.data()), N);
    if (in_.gcount() != N) Truncated(what);
    offset_ += N;
    std::uint64_t v = 0;
    for (int i = 0; i < N; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  [[noreturn]] void Truncated(const char* what) const {
    throw CheckpointError("checkpoint truncated at byte " +
                          std::to_string(offset_) + " while reading " + what);
  }

  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

void SaveCheckpoint(std::ostream& out, const Checkpoint& ckpt) {
  const ModelConfig& cfg = ckpt.student.config();
  if (!(ckpt.teacher.config() == cfg)) {
    throw CheckpointError("student and teacher configs differ");
  }
  Writer w(out);
  w.Raw(kMagic, sizeof(kMagic));
  w.U32(kCheckpointVersion);
  for (std::uint64_t v : {cfg.num_segments, cfg.num_classes, cfg.audio_dim,
                          cfg.visual_dim, cfg.d_model, cfg.n_heads}) {
    w.U64(v);
  }
  w.U64(cfg.seed);
  w.F64(ckpt.alpha);
  w.U64(ckpt.teacher_updates);
  w.U64(ckpt.step);
  w.U64(ckpt.epoch);
  w.U32(static_cast<std::uint32_t>(kNumParamGroups));
  for (std::size_t g = 0; g < kNumParamGroups; ++g) {
    const std::string name = ParamGroupName(static_cast<ParamGroup>(g));
    const Tensor& t = ckpt.student.groups()[g];
    w.U32(static_cast<std::uint32_t>(name.size()));
    w.Raw(name.data(), name.size());
    w.U32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.U64(d);
    w.U64(t.size());
  }
  for (const ModelParams* p : {&ckpt.student, &ckpt.teacher}) {
    for (double v : p->Flatten()) w.F64(v);
  }
  if (!out) throw CheckpointError("write failed");
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  SaveCheckpoint(out, ckpt);
  out.flush();
  if (!out) throw CheckpointError("write to '" + path + "' failed");
}

Checkpoint LoadCheckpoint(std::istream& in) {
  Reader r(in);
  char magic[sizeof(kMagic)];
  r.Raw(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.U32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  }
  ModelConfig cfg;
  std::size_t* dims[] = {&cfg.num_segments, &cfg.num_classes, &cfg.audio_dim,
                         &cfg.visual_dim, &cfg.d_model, &cfg.n_heads};
  for (std::size_t* d : dims) {
    const std::uint64_t v = r.U64("config");
    if (v == 0 || v > kMaxDim) throw CheckpointError("implausible config dimension");
    *d = static_cast<std::size_t>(v);
  }
  cfg.seed = r.U64("seed");
  try {
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(e.what());
  }

  Checkpoint ckpt;
  ckpt.alpha = r.F64("alpha");
  ckpt.teacher_updates = r.U64("teacher updates");
  ckpt.step = r.U64("step");
  ckpt.epoch = r.U64("epoch");

  ModelParams layout(cfg);
  if (r.U32("group count") != kNumParamGroups) {
    throw CheckpointError("parameter group count mismatch");
  }
  for (std::size_t g = 0; g < kNumParamGroups; ++g) {
    const std::string expected = ParamGroupName(static_cast<ParamGroup>(g));
    const std::uint32_t len = r.U32("group name length");
    if (len != expected.size()) {
      throw CheckpointError("group " + std::to_string(g) + ": expected '" +
                            expected + "'");
    }
    std::string name(len, '\0');
    r.Raw(name.data(), len, "group name");
    if (name != expected) {
      throw CheckpointError("group " + std::to_string(g) + ": found '" + name +
                            "', expected '" + expected + "'");
    }
    const Tensor& t = layout.groups()[g];
    const std::uint32_t rank = r.U32("group rank");
    if (rank != t.rank()) throw CheckpointError("group '" + name + "': rank mismatch");
    for (std::size_t d = 0; d < rank; ++d) {
      if (r.U64("group dim") != t.shape()[d]) {
        throw CheckpointError("group '" + name + "': shape mismatch");
      }
    }
    if (r.U64("group size") != t.size()) {
      throw CheckpointError("group '" + name + "': element count mismatch");
    }
  }

  const std::size_t n = layout.num_elements();
  std::vector<double> flat(n);
  for (ModelParams* p : {&ckpt.student, &ckpt.teacher}) {
    for (double& v : flat) v = r.F64("parameter values");
    *p = layout;
    p->Assign(flat);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError("trailing bytes after parameter data");
  }
  return ckpt;
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path + "' for reading");
  return LoadCheckpoint(in);
}

}  // namespace avvp
