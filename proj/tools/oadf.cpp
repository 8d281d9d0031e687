#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "oadf/bench.hpp"
#include "oadf/detector.hpp"
#include "oadf/error.hpp"
#include "oadf/forest.hpp"
#include "oadf/metrics.hpp"
#include "oadf/stream.hpp"
#include "oadf/synth.hpp"

namespace fs = std::filesystem;
using namespace oadf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitFormat = 3;

std::vector<fs::path> list_streams(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".stream") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no .stream files in " + dir.string());
  return out;
}

struct Dataset {
  std::vector<LoadedStream> loaded;
  std::vector<ContextMatrix> contexts;  // empty when not requested

  std::vector<const SkeletonStream*> stream_ptrs() const {
    std::vector<const SkeletonStream*> v;
    for (const auto& l : loaded) v.push_back(&l.stream);
    return v;
  }
  std::vector<const GroundTruth*> truth_ptrs() const {
    std::vector<const GroundTruth*> v;
    for (const auto& l : loaded) v.push_back(l.truth ? &*l.truth : nullptr);
    return v;
  }
  std::vector<const ContextMatrix*> context_ptrs() const {
    std::vector<const ContextMatrix*> v;
    if (contexts.empty()) {
      v.assign(loaded.size(), nullptr);
    } else {
      for (const auto& c : contexts) v.push_back(&c);
    }
    return v;
  }
};

Dataset load_dataset(const fs::path& stream_dir, const fs::path* context_dir, bool need_truth) {
  Dataset ds;
  for (const auto& path : list_streams(stream_dir)) {
    ds.loaded.push_back(load_skeleton_stream(path));
    if (need_truth && !ds.loaded.back().truth)
      throw InputError("stream lacks a #segments annotation block: " + path.string());
    if (context_dir != nullptr) {
      fs::path ctx_path = *context_dir / path.filename().replace_extension(".ctx");
      if (!fs::exists(ctx_path)) throw InputError("missing context file: " + ctx_path.string());
      ds.contexts.push_back(load_context_matrix(ctx_path, ds.loaded.back().stream));
    }
  }
  return ds;
}

ObjectiveWeights mode_weights(const std::string& mode) {
  if (mode == "rf") return ObjectiveWeights::rf();
  if (mode == "rf+t") return ObjectiveWeights::rf_t();
  if (mode == "rf+st") return ObjectiveWeights::rf_st();
  throw InputError("unknown mode '" + mode + "' (expected rf, rf+t or rf+st)");
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& text) {
  std::vector<std::pair<int, int>> pairs;
  if (text.empty()) return pairs;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    auto dash = item.find('-');
    if (dash == std::string::npos) throw InputError("ambiguity pair must look like '1-2'");
    pairs.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return pairs;
}

int run_synth(const SynthConfig& cfg, const std::string& pairs_text, int count,
              const fs::path& out_dir) {
  SynthConfig config = cfg;
  config.ambiguity_pairs = parse_pairs(pairs_text);
  config.validate();
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    auto result = generate_synthetic(config, i);
    auto stem = fmt::format("s{:03}", i);
    write_skeleton_stream(out_dir / (stem + ".stream"), result.stream, &result.truth);
    write_context_matrix(out_dir / (stem + ".ctx"), result.contexts);
    fmt::print("wrote {}/{}.stream ({} frames, {} segments)\n", out_dir.string(), stem,
               result.stream.size(), result.truth.segments.size());
  }
  return kExitOk;
}

int run_train(const fs::path& stream_dir, const fs::path& context_dir, bool has_contexts,
              const std::string& mode, ForestParams params, const fs::path& model_path) {
  params.objectives = mode_weights(mode);
  const bool wants_spatial =
      params.objectives.pairwise_spatial > 0 || params.objectives.higher_spatial > 0;
  if (wants_spatial && !has_contexts)
    throw InputError("mode '" + mode + "' needs --contexts");

  auto ds = load_dataset(stream_dir, (wants_spatial && has_contexts) ? &context_dir : nullptr, true);
  auto set = build_training_set(ds.stream_ptrs(), ds.context_ptrs(), ds.truth_ptrs(),
                                params.deriv_lag);
  int n_joints = ds.loaded[0].stream.n_joints();
  auto forest = train_forest(set, params, n_joints);
  save_forest(forest, model_path);
  std::size_t n_nodes = 0;
  for (const auto& t : forest.trees) n_nodes += t.nodes.size();
  fmt::print("trained {} trees ({} nodes) on {} samples, {} classes -> {}\n", forest.trees.size(),
             n_nodes, set.size(), set.n_classes(), model_path.string());
  return kExitOk;
}

int run_calibrate(const fs::path& model_path, const fs::path& stream_dir) {
  auto forest = load_forest(model_path);
  auto ds = load_dataset(stream_dir, nullptr, true);
  forest.beta = calibrate_beta(forest, ds.stream_ptrs(), ds.truth_ptrs());
  save_forest(forest, model_path);
  fmt::print("beta={}\n", forest.beta);
  return kExitOk;
}

void print_detection(const SkeletonStream& stream, const DetectionResult& result) {
  for (int t = 0; t < static_cast<int>(stream.size()); ++t)
    fmt::print("{} {} {}\n", t, result.causal_labels[t], result.mean_locs[t]);
  fmt::print("#segments\n");
  for (const auto& s : result.segments)
    fmt::print("{} {} {} {:.4f}\n", s.start, s.end, s.class_id, s.score);
}

int run_detect_stream(const fs::path& model_path, const fs::path& stream_path) {
  auto forest = load_forest(model_path);
  auto loaded = load_skeleton_stream(stream_path);
  auto result = run_detector(forest, loaded.stream, forest.beta);
  print_detection(loaded.stream, result);
  return kExitOk;
}

// Streaming mode: header plus frame lines on stdin, one `t label mean_loc`
// line out per frame, flushed so a live producer can pipe frames in.
int run_detect_stdin(const fs::path& model_path) {
  auto forest = load_forest(model_path);

  std::string line;
  if (!std::getline(std::cin, line)) throw FormatError("stdin: missing header line");
  auto header = parse_stream_header(line, "<stdin>");

  SkeletonStream stream;
  stream.frame_rate = header.fps;
  stream.stream_id = "<stdin>";
  DetectorState state(forest.beta, static_cast<int>(forest.n_classes));
  FramePrediction pred;
  std::optional<DetectedSegment> closed;
  std::vector<DetectedSegment> segments;

  int t = 0;
  std::size_t line_no = 1;
  while (std::getline(std::cin, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.rfind("#segments", 0) == 0) break;  // annotations are ignored live
    stream.frames.push_back(parse_frame_line(line, header.n_joints, t, "<stdin>", line_no));
    auto x = extract_frame_feature(stream, t, forest.params.deriv_lag);
    predict_frame_into(forest, x.values, pred);
    int label = state.step(t, pred, closed);
    if (closed) segments.push_back(*closed);
    fmt::print("{} {} {}\n", t, label, pred.mean_loc);
    std::fflush(stdout);
    ++t;
  }
  if (t > 0) {
    segments.push_back(state.finalize(t - 1));
    fmt::print("#segments\n");
    for (const auto& s : segments) fmt::print("{} {} {} {:.4f}\n", s.start, s.end, s.class_id, s.score);
  }
  return kExitOk;
}

int run_eval(const fs::path& model_path, const fs::path& stream_dir, double delta_ms,
             bool include_background) {
  auto forest = load_forest(model_path);
  auto ds = load_dataset(stream_dir, nullptr, true);

  std::vector<int> pred_all, gt_all;
  int matched = 0, n_pred = 0, n_gt = 0;
  double sl_sum = 0.0, el_sum = 0.0;
  int n_streams = 0;

  for (const auto& loaded : ds.loaded) {
    auto result = run_detector(forest, loaded.stream, forest.beta);
    for (int t = 0; t < static_cast<int>(loaded.stream.size()); ++t) {
      pred_all.push_back(result.causal_labels[t]);
      gt_all.push_back(loaded.truth->label_of(t));
    }
    auto events = event_fscore(result.segments, anchors_from_segments(loaded.truth->segments),
                               delta_ms, loaded.stream.frame_rate);
    matched += events.matched;
    n_pred += events.n_pred;
    n_gt += events.n_gt;
    auto bounds = boundary_scores(result.segments, loaded.truth->segments);
    sl_sum += bounds.sl;
    el_sum += bounds.el;
    ++n_streams;
  }

  auto frames = frame_fscore(pred_all, gt_all, static_cast<int>(forest.n_classes),
                             include_background);
  double precision = n_pred > 0 ? static_cast<double>(matched) / n_pred : 0.0;
  double recall = n_gt > 0 ? static_cast<double>(matched) / n_gt : 0.0;
  double event_f1 = (n_pred == 0 && n_gt == 0)
                        ? 1.0
                        : (precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0);
  double sl = n_streams > 0 ? sl_sum / n_streams : 0.0;
  double el = n_streams > 0 ? el_sum / n_streams : 0.0;

  fmt::print("evaluated {} streams, {} frames (beta={})\n", n_streams, gt_all.size(), forest.beta);
  fmt::print("frame F1 per class:\n");
  for (const auto& [cls, f1] : frames.per_class_f1)
    fmt::print("  class {:>3}: {:.4f}\n", cls, f1);
  fmt::print("overall frame F1 ({}): {:.4f}\n",
             include_background ? "all classes" : "background excluded", frames.overall_f1);
  fmt::print("event F1 @ {}ms: {:.4f} ({} matched / {} pred / {} gt)\n", delta_ms, event_f1,
             matched, n_pred, n_gt);
  fmt::print("boundary SL: {:.4f}  EL: {:.4f}\n", sl, el);

  fmt::print("[scores]\n");
  fmt::print("frames={}\n", gt_all.size());
  fmt::print("frame_overall_f1={:.6f}\n", frames.overall_f1);
  for (const auto& [cls, f1] : frames.per_class_f1) fmt::print("frame_f1_class_{}={:.6f}\n", cls, f1);
  fmt::print("event_f1={:.6f}\n", event_f1);
  fmt::print("sl={:.6f}\n", sl);
  fmt::print("el={:.6f}\n", el);
  return kExitOk;
}

int run_bench(const fs::path& model_path, const fs::path& stream_path, int reps,
              const std::string& sweep, int sweep_seeds) {
  if (!sweep.empty()) {
    std::vector<int> counts;
    std::size_t pos = 0;
    while (pos < sweep.size()) {
      auto comma = sweep.find(',', pos);
      counts.push_back(std::stoi(sweep.substr(pos, comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    SynthConfig cfg;
    cfg.n_classes = 3;
    cfg.n_joints = 3;
    cfg.segments_per_stream = 6;
    cfg.min_segment_frames = 20;
    cfg.max_segment_frames = 40;
    cfg.noise_scale = 0.8;
    cfg.context_dim = 8;
    cfg.context_snr = 4.0;
    cfg.ambiguity_pairs = {{1, 2}};
    ForestParams base;
    base.max_depth = 100;
    base.n_candidates = 24;
    base.m_max = 128;
    auto rows = sweep_trees(cfg, base, counts, sweep_seeds, 2, 1);
    fmt::print("{:>6} {:>12} {:>16}\n", "trees", "accuracy", "frame_time_us");
    for (const auto& row : rows)
      fmt::print("{:>6} {:>12.4f} {:>16.3f}\n", row.trees, row.mean_accuracy, row.mean_frame_time_us);
    return kExitOk;
  }

  auto forest = load_forest(model_path);
  auto loaded = load_skeleton_stream(stream_path);
  auto stats = benchmark_latency(forest, loaded.stream, reps);
  fmt::print("frames measured: {}\n", stats.n_measurements);
  fmt::print("mean:   {:.3f} us\n", stats.mean_us);
  fmt::print("median: {:.3f} us\n", stats.median_us);
  fmt::print("p99:    {:.3f} us\n", stats.p99_us);
  fmt::print("max comparisons/frame: {} (budget {})\n", stats.max_comparisons,
             stats.comparison_budget);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming skeleton action detection with context-trained random forests"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic stream/context/annotation files");
  SynthConfig synth_cfg;
  std::string pairs_text;
  int synth_count = 1;
  std::string synth_out;
  synth->set_config("--config", "", "TOML config file with the options below");
  synth->add_option("--n-classes", synth_cfg.n_classes, "Action classes (ids 1..n)");
  synth->add_option("--n-joints", synth_cfg.n_joints, "Skeleton joints");
  synth->add_option("--segments", synth_cfg.segments_per_stream, "Action segments per stream");
  synth->add_option("--min-frames", synth_cfg.min_segment_frames, "Min frames per segment");
  synth->add_option("--max-frames", synth_cfg.max_segment_frames, "Max frames per segment");
  synth->add_option("--noise-scale", synth_cfg.noise_scale, "Joint position noise stddev");
  synth->add_option("--context-dim", synth_cfg.context_dim, "Spatial context dimension");
  synth->add_option("--context-snr", synth_cfg.context_snr, "Spatial context signal-to-noise");
  synth->add_option("--ambiguity-pairs", pairs_text, "Class pairs sharing templates, e.g. 1-2,3-4");
  synth->add_option("--seed", synth_cfg.seed, "Dataset seed");
  synth->add_option("--fps", synth_cfg.fps, "Frame rate");
  synth->add_option("--count", synth_count, "Number of streams to generate");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a forest from annotated streams");
  std::string train_streams, train_contexts, train_mode = "rf+st", train_model;
  ForestParams train_params;
  train->add_option("--streams", train_streams, "Directory of .stream files")->required();
  train->add_option("--contexts", train_contexts, "Directory of .ctx files");
  train->add_option("--mode", train_mode, "rf | rf+t | rf+st");
  train->add_option("--trees", train_params.n_trees, "Number of trees");
  train->add_option("--max-depth", train_params.max_depth, "Maximum tree depth");
  train->add_option("--min-samples", train_params.min_samples, "Leaf sample threshold");
  train->add_option("--candidates", train_params.n_candidates, "Split candidates per node");
  train->add_option("--m-max", train_params.m_max, "Pairwise embedding subsample cap");
  train->add_option("--deriv-lag", train_params.deriv_lag, "Derivative lag in frames");
  train->add_option("--seed", train_params.seed, "Training seed");
  train->add_flag("--squared-higher", train_params.squared_higher,
                  "Squared deviations in the higher-order objective");
  train->add_option("--model", train_model, "Output model path")->required();

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Grid-search beta and store it in the model");
  std::string cal_model, cal_streams;
  calibrate->add_option("--model", cal_model, "Model file")->required();
  calibrate->add_option("--streams", cal_streams, "Directory of annotated streams")->required();

  // detect
  auto* detect = app.add_subcommand("detect", "Per-frame labels and segments for a stream");
  std::string det_model, det_stream;
  bool det_stdin = false;
  detect->add_option("--model", det_model, "Model file")->required();
  detect->add_option("--stream", det_stream, "Stream file");
  detect->add_flag("--stdin", det_stdin, "Read frames from standard input");

  // eval
  auto* eval = app.add_subcommand("eval", "Frame/event/boundary metrics over a directory");
  std::string eval_model, eval_streams;
  double eval_delta = 333.0;
  bool eval_bg = false;
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--streams", eval_streams, "Directory of annotated streams")->required();
  eval->add_option("--delta-ms", eval_delta, "Event tolerance in milliseconds");
  eval->add_flag("--include-background", eval_bg, "Pool background into the overall F1");

  // bench
  auto* bench = app.add_subcommand("bench", "Latency statistics or a tree-count sweep");
  std::string bench_model, bench_stream, bench_sweep;
  int bench_reps = 1000, bench_seeds = 10;
  bench->add_option("--model", bench_model, "Model file");
  bench->add_option("--stream", bench_stream, "Stream file");
  bench->add_option("--reps", bench_reps, "Repetitions over the stream");
  bench->add_option("--sweep-trees", bench_sweep, "Comma list of tree counts, e.g. 1,5,10,25,50");
  bench->add_option("--sweep-seeds", bench_seeds, "Seeds per sweep point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (synth->parsed()) return run_synth(synth_cfg, pairs_text, synth_count, synth_out);
    if (train->parsed())
      return run_train(train_streams, train_contexts, !train_contexts.empty(), train_mode,
                       train_params, train_model);
    if (calibrate->parsed()) return run_calibrate(cal_model, cal_streams);
    if (detect->parsed()) {
      if (det_stdin == !det_stream.empty())
        throw InputError("detect needs exactly one of --stream or --stdin");
      return det_stdin ? run_detect_stdin(det_model) : run_detect_stream(det_model, det_stream);
    }
    if (eval->parsed()) return run_eval(eval_model, eval_streams, eval_delta, eval_bg);
    if (bench->parsed()) {
      if (bench_sweep.empty() && (bench_model.empty() || bench_stream.empty()))
        throw InputError("bench needs --model and --stream, or --sweep-trees");
      return run_bench(bench_model, bench_stream, bench_reps, bench_sweep, bench_seeds);
    }
  } catch (const FormatError& e) {
    fmt::print(stderr, "format error: {}\n", e.what());
    return kExitFormat;
  } catch (const InputError& e) {
    fmt::print(stderr, "input error: {}\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  }
  return kExitOk;
}
