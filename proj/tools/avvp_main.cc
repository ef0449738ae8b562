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
// avvp: generate synthetic data, train, evaluate, check gradients and
// inspect teacher masks.
//
// Exit codes: 0 success, 1 usage, 2 data or I/O, 3 numerical failure.

#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avvp/checkpoint.h"
#include "avvp/dataset.h"
#include "avvp/gradcheck.h"
#include "avvp/metrics.h"
#include "avvp/trainer.h"
#include "json.hpp"

#ifndef AVVP_VERSION
#define AVVP_VERSION "0.0.0"
#endif

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

#ifdef AVVP_BASELINE_ONLY
constexpr bool kBaselineBuild = true;
#else
constexpr bool kBaselineBuild = false;
#endif

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string Exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// --seed wins, then AVVP_SEED, then the built-in default.
std::uint64_t ResolveSeed(const CLI::Option* flag, std::uint64_t value) {
  if (flag->count() > 0) return value;
  const char* env = std::getenv("AVVP_SEED");
  if (env == nullptr || *env == '\0') return value;
  char* end = nullptr;
  errno = 0;
  const unsigned long long parsed = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') {
    throw UsageError(std::string("AVVP_SEED is not an unsigned integer: '") + env + "'");
  }
  return parsed;
}

// Every run records its resolved flags so that `avvp replay` reproduces it.
void WriteManifest(const std::string& path, const std::string& command,
                   std::uint64_t seed, const Json& config, const Json& artifacts,
                   const std::vector<std::string>& argv) {
  Json m;
  m["tool"] = "avvp";
  m["version"] = AVVP_VERSION;
  m["build"] = kBaselineBuild ? "baseline" : "full";
  m["command"] = command;
  m["seed"] = seed;
  m["config"] = config;
  m["artifacts"] = artifacts;
  m["argv"] = argv;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open manifest '" + path + "' for writing");
  out << m.dump(2) << "\n";
  if (!out) throw std::runtime_error("write to manifest '" + path + "' failed");
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  avvp::GenConfig cfg;
  std::size_t test_videos = 0;
  std::string out;
  std::string test_out;
  std::string encoding = "dec";
  std::string manifest;
  CLI::Option* seed_flag = nullptr;
};

void AddGenerate(CLI::App& app, GenerateArgs& a) {
  auto* sub = app.add_subcommand("generate", "Write a synthetic dataset with planted events");
  auto& c = a.cfg;
  sub->add_option("--videos", c.n_videos, "Number of (training) videos")->capture_default_str();
  sub->add_option("--T", c.num_segments, "Segments per video")->capture_default_str();
  sub->add_option("--C", c.num_classes, "Event classes")->capture_default_str();
  sub->add_option("--d-a", c.audio_dim, "Audio feature width")->capture_default_str();
  sub->add_option("--d-v", c.visual_dim, "Visual feature width")->capture_default_str();
  sub->add_option("--min-events", c.min_events, "Fewest events per video")->capture_default_str();
  sub->add_option("--max-events", c.max_events, "Most events per video")->capture_default_str();
  sub->add_option("--min-span", c.min_span, "Shortest event, in segments")->capture_default_str();
  sub->add_option("--max-span", c.max_span, "Longest event, in segments")->capture_default_str();
  sub->add_option("--audio-only", c.mix.audio_only, "Mixture weight of audio-only events")
      ->capture_default_str();
  sub->add_option("--visual-only", c.mix.visual_only, "Mixture weight of visual-only events")
      ->capture_default_str();
  sub->add_option("--audio-visual", c.mix.audio_visual,
                  "Mixture weight of audio-visual events")
      ->capture_default_str();
  sub->add_option("--sigma", c.sigma, "Feature noise standard deviation")->capture_default_str();
  sub->add_option("--signal", c.signal, "Prototype norm")->capture_default_str();
  a.seed_flag = sub->add_option("--seed", c.seed, "Generator seed (or AVVP_SEED)")
                    ->capture_default_str();
  sub->add_option("--out", a.out, "Dataset file")->required();
  sub->add_option("--test-videos", a.test_videos,
                  "Extra videos generated after the training ones and written to --test-out")
      ->capture_default_str();
  sub->add_option("--test-out", a.test_out, "Held-out dataset file");
  sub->add_option("--encoding", a.encoding, "Float encoding")
      ->check(CLI::IsMember({"dec", "hex"}))
      ->capture_default_str();
  sub->add_option("--manifest", a.manifest, "Run manifest (default: <out>.manifest.json)");
}

int RunGenerate(GenerateArgs& a) {
  a.cfg.seed = ResolveSeed(a.seed_flag, a.cfg.seed);
  if ((a.test_videos > 0) != !a.test_out.empty()) {
    throw UsageError("--test-videos and --test-out must be given together");
  }
  if (a.manifest.empty()) a.manifest = a.out + ".manifest.json";
  const auto& c = a.cfg;
  const std::size_t train_videos = c.n_videos;

  std::vector<std::string> argv = {
      "generate", "--videos", std::to_string(c.n_videos), "--T", std::to_string(c.num_segments),
      "--C", std::to_string(c.num_classes), "--d-a", std::to_string(c.audio_dim),
      "--d-v", std::to_string(c.visual_dim), "--min-events", std::to_string(c.min_events),
      "--max-events", std::to_string(c.max_events), "--min-span", std::to_string(c.min_span),
      "--max-span", std::to_string(c.max_span), "--audio-only", Exact(c.mix.audio_only),
      "--visual-only", Exact(c.mix.visual_only), "--audio-visual", Exact(c.mix.audio_visual),
      "--sigma", Exact(c.sigma), "--signal", Exact(c.signal), "--seed", std::to_string(c.seed),
      "--out", a.out, "--encoding", a.encoding, "--manifest", a.manifest};
  if (a.test_videos > 0) {
    argv.insert(argv.end(), {"--test-videos", std::to_string(a.test_videos),
                             "--test-out", a.test_out});
  }
  Json config = {{"videos", c.n_videos},          {"test_videos", a.test_videos},
                 {"T", c.num_segments},           {"C", c.num_classes},
                 {"d_a", c.audio_dim},            {"d_v", c.visual_dim},
                 {"min_events", c.min_events},    {"max_events", c.max_events},
                 {"min_span", c.min_span},        {"max_span", c.max_span},
                 {"audio_only", c.mix.audio_only}, {"visual_only", c.mix.visual_only},
                 {"audio_visual", c.mix.audio_visual}, {"sigma", c.sigma},
                 {"signal", c.signal},            {"encoding", a.encoding}};
  Json artifacts = {{"dataset", a.out}};
  if (a.test_videos > 0) artifacts["test_dataset"] = a.test_out;

  avvp::GenConfig all = c;
  all.n_videos = train_videos + a.test_videos;
  all.Validate();
  WriteManifest(a.manifest, "generate", c.seed, config, artifacts, argv);

  const avvp::FloatEncoding enc =
      a.encoding == "hex" ? avvp::FloatEncoding::kHex : avvp::FloatEncoding::kDecimal;
  const avvp::Dataset data = avvp::GenerateDataset(all);
  const auto [train, test] = avvp::SplitDataset(data, a.test_videos);
  avvp::SaveDataset(a.out, train, enc);
  if (a.test_videos > 0) avvp::SaveDataset(a.test_out, test, enc);
  std::printf("wrote %zu videos to %s\n", train.videos.size(), a.out.c_str());
  if (a.test_videos > 0) {
    std::printf("wrote %zu videos to %s\n", test.videos.size(), a.test_out.c_str());
  }
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  avvp::TrainConfig cfg;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  bool no_ema = false;
  bool no_cma = false;
  bool no_label_gating = false;
  bool no_shuffle = false;
  std::string optimizer = "sgd";
  std::string mask_mode = "topk";
  std::string data;
  std::string checkpoint;
  std::string log;
  std::string masks_out;
  std::string manifest;
  CLI::Option* seed_flag = nullptr;
};

void AddTrain(CLI::App& app, TrainArgs& a) {
  auto* sub = app.add_subcommand("train", "Train the student (and its EMA teacher)");
  auto& c = a.cfg;
  sub->add_option("--data", a.data, "Training dataset file")->required();
  sub->add_option("--checkpoint", a.checkpoint, "Output checkpoint (default: <data>.ckpt)");
  sub->add_option("--log", a.log, "Per-step loss CSV (default: <checkpoint>.log.csv)");
  sub->add_option("--masks-out", a.masks_out, "Write the last teacher masks here");
  sub->add_option("--manifest", a.manifest,
                  "Run manifest (default: <checkpoint>.manifest.json)");
  sub->add_option("--epochs", c.epochs, "Passes over the data")->capture_default_str();
  sub->add_option("--lr", c.learning_rate, "Learning rate")->capture_default_str();
  sub->add_option("--optimizer", a.optimizer, "Optimizer")
      ->check(CLI::IsMember({"sgd", "momentum"}))
      ->capture_default_str();
  sub->add_option("--momentum", c.momentum, "Momentum coefficient")->capture_default_str();
  sub->add_option("--d-model", a.d_model, "Embedding width")->capture_default_str();
  sub->add_option("--heads", a.n_heads, "Attention heads")->capture_default_str();
  sub->add_flag("--no-ema", a.no_ema, "Disable the EMA teacher and pseudo loss");
  sub->add_flag("--no-cma", a.no_cma, "Disable the cross-modal agreement loss");
  sub->add_option("--mask-mode", a.mask_mode, "Pseudo mask rule")
      ->check(CLI::IsMember({"adaptive", "topk"}))
      ->capture_default_str();
  sub->add_option("--alpha", c.alpha, "EMA momentum")->capture_default_str();
  sub->add_option("--gamma", c.gamma, "Adaptive threshold scale")->capture_default_str();
  sub->add_option("--k", c.k, "Segments per class for top-k masks")->capture_default_str();
  sub->add_flag("--no-label-gating", a.no_label_gating,
                "Let masks select classes absent from the video label");
  sub->add_option("--warmup", c.warmup_epochs, "Epochs before pseudo masks are used")
      ->capture_default_str();
  sub->add_option("--mask-refresh", c.mask_refresh_epochs,
                  "Regenerate masks every this many epochs")
      ->capture_default_str();
  sub->add_option("--tau-a", c.tau_a, "Audio confidence threshold for CMA pairs")
      ->capture_default_str();
  sub->add_option("--tau-v", c.tau_v, "Visual confidence threshold for CMA pairs")
      ->capture_default_str();
  sub->add_flag("--no-shuffle", a.no_shuffle, "Visit videos in file order");
  a.seed_flag = sub->add_option("--seed", c.seed, "Init and shuffle seed (or AVVP_SEED)")
                    ->capture_default_str();
}

int RunTrain(TrainArgs& a) {
  auto& c = a.cfg;
  c.seed = ResolveSeed(a.seed_flag, c.seed);
  c.enable_ema = !a.no_ema;
  c.enable_cma = !a.no_cma;
  c.label_gating = !a.no_label_gating;
  c.shuffle = !a.no_shuffle;
  c.optimizer = a.optimizer == "momentum" ? avvp::OptimizerKind::kMomentum
                                          : avvp::OptimizerKind::kSgd;
  c.mask_mode = a.mask_mode == "adaptive" ? avvp::MaskMode::kAdaptive : avvp::MaskMode::kTopK;
  if (kBaselineBuild && (c.enable_ema || c.enable_cma)) {
    throw UsageError("this build has the teacher and cross-modal paths compiled out; "
                     "pass --no-ema --no-cma");
  }
  if (!(c.learning_rate > 0.0)) throw UsageError("--lr must be > 0");
  try {
    c.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.checkpoint.empty()) a.checkpoint = a.data + ".ckpt";
  if (a.log.empty()) a.log = a.checkpoint + ".log.csv";
  if (a.manifest.empty()) a.manifest = a.checkpoint + ".manifest.json";

  const avvp::Dataset data = avvp::LoadDataset(a.data);
  if (data.videos.empty()) throw std::runtime_error("dataset '" + a.data + "' has no videos");
  avvp::ModelConfig mc;
  mc.num_segments = data.num_segments;
  mc.num_classes = data.num_classes;
  mc.audio_dim = data.audio_dim;
  mc.visual_dim = data.visual_dim;
  mc.d_model = a.d_model;
  mc.n_heads = a.n_heads;
  mc.seed = c.seed;
  try {
    mc.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<std::string> argv = {
      "train", "--data", a.data, "--checkpoint", a.checkpoint, "--log", a.log,
      "--manifest", a.manifest, "--epochs", std::to_string(c.epochs), "--lr",
      Exact(c.learning_rate), "--optimizer", a.optimizer, "--momentum", Exact(c.momentum),
      "--d-model", std::to_string(a.d_model), "--heads", std::to_string(a.n_heads),
      "--mask-mode", a.mask_mode, "--alpha", Exact(c.alpha), "--gamma", Exact(c.gamma),
      "--k", std::to_string(c.k), "--warmup", std::to_string(c.warmup_epochs),
      "--mask-refresh", std::to_string(c.mask_refresh_epochs), "--tau-a", Exact(c.tau_a),
      "--tau-v", Exact(c.tau_v), "--seed", std::to_string(c.seed)};
  if (a.no_ema) argv.push_back("--no-ema");
  if (a.no_cma) argv.push_back("--no-cma");
  if (a.no_label_gating) argv.push_back("--no-label-gating");
  if (a.no_shuffle) argv.push_back("--no-shuffle");
  if (!a.masks_out.empty()) argv.insert(argv.end(), {"--masks-out", a.masks_out});
  const Json config = {{"epochs", c.epochs},
                       {"learning_rate", c.learning_rate},
                       {"optimizer", a.optimizer},
                       {"momentum", c.momentum},
                       {"d_model", a.d_model},
                       {"n_heads", a.n_heads},
                       {"enable_ema", c.enable_ema},
                       {"enable_cma", c.enable_cma},
                       {"mask_mode", a.mask_mode},
                       {"alpha", c.alpha},
                       {"gamma", c.gamma},
                       {"k", c.k},
                       {"label_gating", c.label_gating},
                       {"warmup_epochs", c.warmup_epochs},
                       {"mask_refresh_epochs", c.mask_refresh_epochs},
                       {"tau_a", c.tau_a},
                       {"tau_v", c.tau_v},
                       {"shuffle", c.shuffle},
                       {"T", mc.num_segments},
                       {"C", mc.num_classes},
                       {"d_a", mc.audio_dim},
                       {"d_v", mc.visual_dim}};
  Json artifacts = {{"data", a.data}, {"checkpoint", a.checkpoint}, {"log", a.log}};
  if (!a.masks_out.empty()) artifacts["masks"] = a.masks_out;
  WriteManifest(a.manifest, "train", c.seed, config, artifacts, argv);

  avvp::TrainState state = avvp::InitTrainState(mc, c);
  for (std::size_t e = 0; e < c.epochs; ++e) {
    const avvp::EpochSummary s = avvp::TrainEpoch(state, data, c);
    std::printf("epoch %3" PRIu64 "  l_avvp %.6f  l_pseudo %.6f  l_cma %.6f  l_total %.6f\n",
                s.epoch, s.l_avvp, s.l_pseudo, s.l_cma, s.l_total);
    std::fflush(stdout);
  }

  avvp::SaveCheckpoint(a.checkpoint, avvp::MakeCheckpoint(state));
  {
    std::ofstream log(a.log);
    if (!log) throw std::runtime_error("cannot open '" + a.log + "' for writing");
    avvp::WriteTrainingLog(log, state.history);
    if (!log) throw std::runtime_error("write to '" + a.log + "' failed");
  }
  if (!a.masks_out.empty()) {
    std::ofstream out(a.masks_out);
    if (!out) throw std::runtime_error("cannot open '" + a.masks_out + "' for writing");
    for (std::size_t i = 0; i < state.masks.size(); ++i) {
      avvp::WriteMask(out, data.videos[i].id, state.masks[i]);
    }
    if (state.masks.empty()) {
      std::fprintf(stderr, "note: no teacher masks were generated; %s is empty\n",
                   a.masks_out.c_str());
    }
  }
  std::printf("wrote %s and %s (%" PRIu64 " steps)\n", a.checkpoint.c_str(), a.log.c_str(),
              state.step);
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string pred;
  std::string gt;
  double threshold = 0.5;
  std::string export_pred;
  std::string csv;
};

void AddEval(CLI::App& app, EvalArgs& a) {
  auto* sub = app.add_subcommand(
      "eval", "Segment- and event-level F1 of a checkpoint, or of a prediction label file");
  sub->add_option("--checkpoint", a.checkpoint, "Trained checkpoint (student is evaluated)");
  sub->add_option("--data", a.data, "Dataset with segment ground truth");
  sub->add_option("--pred", a.pred, "Prediction label file (instead of a checkpoint)");
  sub->add_option("--gt", a.gt, "Ground-truth label file (instead of --data)");
  sub->add_option("--threshold", a.threshold, "Binarization threshold")->capture_default_str();
  sub->add_option("--export-pred", a.export_pred, "Write binarized predictions as labels");
  sub->add_option("--csv", a.csv, "Also write the CSV report here");
}

int RunEval(EvalArgs& a) {
  const bool from_model = !a.checkpoint.empty();
  if (from_model == !a.pred.empty()) {
    throw UsageError("give exactly one of --checkpoint or --pred");
  }
  if (a.data.empty() == a.gt.empty()) throw UsageError("give exactly one of --data or --gt");
  if (from_model && a.data.empty()) throw UsageError("--checkpoint needs --data");
  if (!(a.threshold > 0.0 && a.threshold <= 1.0)) {
    throw UsageError("--threshold must lie in (0, 1]");
  }

  std::vector<avvp::LabeledVideo> pred;
  std::vector<avvp::LabeledVideo> gt;
  if (!a.data.empty()) {
    const avvp::Dataset data = avvp::LoadDataset(a.data);
    gt = avvp::GroundTruthLabels(data);
    if (from_model) {
      const avvp::Checkpoint ckpt = avvp::LoadCheckpoint(a.checkpoint);
      const avvp::ModelConfig& mc = ckpt.student.config();
      if (mc.num_segments != data.num_segments || mc.num_classes != data.num_classes ||
          mc.audio_dim != data.audio_dim || mc.visual_dim != data.visual_dim) {
        throw avvp::ShapeError("checkpoint and dataset dimensions differ");
      }
      pred = avvp::PredictLabels(ckpt.student, data, a.threshold);
    }
  } else {
    gt = avvp::ReadLabelFile(a.gt);
  }
  if (!from_model) pred = avvp::ReadLabelFile(a.pred);
  if (gt.empty()) throw std::runtime_error("no videos to evaluate");

  avvp::MetricReport report;
  try {
    report = avvp::EvaluateLabels(pred, gt);
  } catch (const std::invalid_argument& e) {
    throw avvp::ShapeError(e.what());
  }
  const std::string csv = avvp::FormatReportCsv(report);
  std::cout << avvp::FormatReportTable(report) << "\n" << csv;
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    out << csv;
    if (!out) throw std::runtime_error("write to '" + a.csv + "' failed");
  }
  if (!a.export_pred.empty()) avvp::WriteLabelFile(a.export_pred, pred);
  return kExitOk;
}

// --------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::uint64_t seed = 1;
  double tolerance = 1e-5;
  double epsilon = 1e-5;
  CLI::Option* seed_flag = nullptr;
};

void AddGradcheck(CLI::App& app, GradcheckArgs& a) {
  auto* sub = app.add_subcommand(
      "gradcheck", "Finite-difference check of the full loss gradient on a toy instance");
  a.seed_flag = sub->add_option("--seed", a.seed, "Toy instance seed (or AVVP_SEED)")
                    ->capture_default_str();
  sub->add_option("--tolerance", a.tolerance, "Largest accepted relative error")
      ->capture_default_str();
  sub->add_option("--epsilon", a.epsilon, "Finite-difference step")->capture_default_str();
}

int RunGradcheck(GradcheckArgs& a) {
  a.seed = ResolveSeed(a.seed_flag, a.seed);
  if (!(a.epsilon > 0.0)) throw UsageError("--epsilon must be > 0");
  const avvp::ToyProblem toy = avvp::MakeToyProblem(a.seed);
  const avvp::GradCheckResult r = avvp::CheckTotalLossGradient(toy, a.epsilon);
  std::printf("params %zu  mask cells %zu  valid pairs %zu  tau %.6f\n", r.num_params,
              r.mask_count, r.num_pairs, toy.options.tau_a);
  std::printf("max relative error %.3e (tolerance %.1e)\n", r.max_rel_error, a.tolerance);
  if (!(r.max_rel_error < a.tolerance)) {
    std::fprintf(stderr, "gradient check failed\n");
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------- masks / labels

struct MasksArgs {
  std::string checkpoint;
  std::string data;
  std::string mask_mode = "topk";
  double gamma = 1.0;
  std::size_t k = 1;
  bool no_label_gating = false;
  std::string out;
};

void AddMasks(CLI::App& app, MasksArgs& a) {
  auto* sub = app.add_subcommand("masks", "Export the pseudo masks of a checkpoint's teacher");
  sub->add_option("--checkpoint", a.checkpoint, "Trained checkpoint")->required();
  sub->add_option("--data", a.data, "Dataset")->required();
  sub->add_option("--mask-mode", a.mask_mode, "Pseudo mask rule")
      ->check(CLI::IsMember({"adaptive", "topk"}))
      ->capture_default_str();
  sub->add_option("--gamma", a.gamma, "Adaptive threshold scale")->capture_default_str();
  sub->add_option("--k", a.k, "Segments per class for top-k masks")->capture_default_str();
  sub->add_flag("--no-label-gating", a.no_label_gating, "Do not gate by the video label");
  sub->add_option("--out", a.out, "Output file (default: standard output)");
}

int RunMasks(MasksArgs& a) {
  avvp::TrainConfig cfg;
  cfg.mask_mode = a.mask_mode == "adaptive" ? avvp::MaskMode::kAdaptive : avvp::MaskMode::kTopK;
  cfg.gamma = a.gamma;
  cfg.k = a.k;
  cfg.label_gating = !a.no_label_gating;
  try {
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const avvp::Checkpoint ckpt = avvp::LoadCheckpoint(a.checkpoint);
  const avvp::Dataset data = avvp::LoadDataset(a.data);
  const avvp::TeacherState teacher(ckpt.teacher, ckpt.alpha);
  const auto masks = avvp::GenerateMasks(teacher, data, cfg);

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw std::runtime_error("cannot open '" + a.out + "' for writing");
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    avvp::WriteMask(out, data.videos[i].id, masks[i]);
  }
  if (!out) throw std::runtime_error("writing masks failed");
  return kExitOk;
}

struct LabelsArgs {
  std::string data;
  std::string out;
};

void AddLabels(CLI::App& app, LabelsArgs& a) {
  auto* sub = app.add_subcommand("labels", "Export the segment ground truth as a label file");
  sub->add_option("--data", a.data, "Dataset")->required();
  sub->add_option("--out", a.out, "Label file")->required();
}

int RunLabels(const LabelsArgs& a) {
  avvp::WriteLabelFile(a.out, avvp::GroundTruthLabels(avvp::LoadDataset(a.data)));
  return kExitOk;
}

// ------------------------------------------------------------------ replay

struct ReplayArgs {
  std::string manifest;
};

void AddReplay(CLI::App& app, ReplayArgs& a) {
  auto* sub = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  sub->add_option("manifest", a.manifest, "Manifest written by generate or train")
      ->required();
}

int Run(const std::vector<std::string>& args, bool allow_replay);

int RunReplay(const ReplayArgs& a) {
  std::ifstream in(a.manifest);
  if (!in) throw std::runtime_error("cannot open '" + a.manifest + "' for reading");
  Json m;
  try {
    in >> m;
  } catch (const Json::exception& e) {
    throw std::runtime_error("manifest '" + a.manifest + "': " + e.what());
  }
  if (!m.contains("argv") || !m["argv"].is_array()) {
    throw std::runtime_error("manifest '" + a.manifest + "' has no argv array");
  }
  if (m.value("build", "") != (kBaselineBuild ? "baseline" : "full")) {
    throw UsageError("manifest was written by the '" + m.value("build", std::string("?")) +
                     "' build");
  }
  std::vector<std::string> args;
  for (const auto& v : m["argv"]) args.push_back(v.get<std::string>());
  return Run(args, /*allow_replay=*/false);
}

int Run(const std::vector<std::string>& args, bool allow_replay) {
  CLI::App app{kBaselineBuild
                   ? "avvp (baseline build: teacher and cross-modal paths compiled out)"
                   : "avvp: weakly-supervised audio-visual video parsing"};
  app.name("avvp");
  app.set_version_flag("--version", AVVP_VERSION);
  app.require_subcommand(1);

  GenerateArgs gen;
  TrainArgs train;
  EvalArgs eval;
  GradcheckArgs grad;
  MasksArgs masks;
  LabelsArgs labels;
  ReplayArgs replay;
  AddGenerate(app, gen);
  AddTrain(app, train);
  AddEval(app, eval);
  AddGradcheck(app, grad);
  AddMasks(app, masks);
  AddLabels(app, labels);
  AddReplay(app, replay);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  if (cmd == "generate") return RunGenerate(gen);
  if (cmd == "train") return RunTrain(train);
  if (cmd == "eval") return RunEval(eval);
  if (cmd == "gradcheck") return RunGradcheck(grad);
  if (cmd == "masks") return RunMasks(masks);
  if (cmd == "labels") return RunLabels(labels);
  if (!allow_replay) throw UsageError("a manifest cannot replay another replay");
  return RunReplay(replay);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return Run(args, /*allow_replay=*/true);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const avvp::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const avvp::ParseError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const avvp::CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return kExitData;
  } catch (const avvp::ShapeError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
}
