#include "oadf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "oadf/detector.hpp"
#include "oadf/error.hpp"
#include "oadf/features.hpp"
#include "oadf/metrics.hpp"

namespace oadf {

namespace {

using Clock = std::chrono::steady_clock;

double percentile(std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  double idx = q * (sorted.size() - 1);
  auto lo = static_cast<std::size_t>(idx);
  auto hi = std::min(lo + 1, sorted.size() - 1);
  double frac = idx - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

LatencyStats benchmark_latency(const Forest& forest, const SkeletonStream& stream,
                               int repetitions) {
  if (repetitions < 1) throw InputError("benchmark needs at least one repetition");
  if (stream.size() == 0) throw InputError("benchmark stream is empty");

  LatencyStats stats;
  stats.comparison_budget =
      static_cast<std::size_t>(forest.trees.size()) * static_cast<std::size_t>(forest.params.max_depth);

  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repetitions) * stream.size());
  FramePrediction pred;
  for (int rep = 0; rep < repetitions; ++rep) {
    DetectorState state(forest.beta, static_cast<int>(forest.n_classes));
    std::optional<DetectedSegment> closed;
    for (int t = 0; t < static_cast<int>(stream.size()); ++t) {
      std::size_t comparisons = 0;
      auto t0 = Clock::now();
      auto x = extract_frame_feature(stream, t, forest.params.deriv_lag);
      predict_frame_into(forest, x.values, pred, &comparisons);
      state.step(t, pred, closed);
      auto t1 = Clock::now();
      samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
      stats.max_comparisons = std::max(stats.max_comparisons, comparisons);
    }
  }

  stats.n_measurements = samples.size();
  double sum = 0.0;
  for (double v : samples) sum += v;
  stats.mean_us = sum / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  stats.median_us = percentile(samples, 0.5);
  stats.p99_us = percentile(samples, 0.99);
  return stats;
}

SyntheticSplit make_synthetic_split(const SynthConfig& config, int n_train, int n_test) {
  if (n_train < 1 || n_test < 1) throw InputError("split needs train and test streams");
  SyntheticSplit split;
  for (int i = 0; i < n_train; ++i) split.train.push_back(generate_synthetic(config, i));
  for (int i = 0; i < n_test; ++i) split.test.push_back(generate_synthetic(config, n_train + i));
  return split;
}

TrialResult run_synthetic_trial(const SynthConfig& config, const ForestParams& params, int n_train,
                                int n_test, bool calibrate) {
  auto split = make_synthetic_split(config, n_train, n_test);

  std::vector<const SkeletonStream*> streams;
  std::vector<const ContextMatrix*> contexts;
  std::vector<const GroundTruth*> truths;
  for (const auto& s : split.train) {
    streams.push_back(&s.stream);
    contexts.push_back(&s.contexts);
    truths.push_back(&s.truth);
  }
  auto set = build_training_set(streams, contexts, truths, params.deriv_lag);
  auto forest = train_forest(set, params, config.n_joints);

  TrialResult result;
  if (calibrate) {
    std::vector<const SkeletonStream*> cal_streams;
    std::vector<const GroundTruth*> cal_truths;
    for (const auto& s : split.train) {
      cal_streams.push_back(&s.stream);
      cal_truths.push_back(&s.truth);
    }
    forest.beta = calibrate_beta(forest, cal_streams, cal_truths);
  }
  result.beta = forest.beta;

  std::vector<int> pred_all, gt_all;
  for (const auto& s : split.test) {
    auto detection = run_detector(forest, s.stream, forest.beta);
    for (int t = 0; t < static_cast<int>(s.stream.size()); ++t) {
      pred_all.push_back(detection.causal_labels[t]);
      gt_all.push_back(s.truth.label_of(t));
    }
  }
  auto scores = frame_fscore(pred_all, gt_all, set.n_classes());
  result.frame_f1 = scores.overall_f1;
  long correct = 0;
  for (std::size_t i = 0; i < pred_all.size(); ++i) correct += pred_all[i] == gt_all[i];
  result.frame_accuracy = static_cast<double>(correct) / static_cast<double>(pred_all.size());
  return result;
}

std::vector<SweepRow> sweep_trees(const SynthConfig& config, const ForestParams& base,
                                  const std::vector<int>& tree_counts, int n_seeds, int n_train,
                                  int n_test) {
  if (tree_counts.empty()) throw InputError("sweep needs at least one tree count");
  if (n_seeds < 1) throw InputError("sweep needs at least one seed");

  std::vector<SweepRow> rows;
  for (int count : tree_counts) {
    SweepRow row;
    row.trees = count;
    for (int seed = 0; seed < n_seeds; ++seed) {
      SynthConfig cfg = config;
      cfg.seed = mix_seed(config.seed, 0x5EEDul + static_cast<std::uint64_t>(seed));
      ForestParams params = base;
      params.n_trees = count;
      params.seed = cfg.seed;

      auto split = make_synthetic_split(cfg, n_train, n_test);
      std::vector<const SkeletonStream*> streams;
      std::vector<const ContextMatrix*> contexts;
      std::vector<const GroundTruth*> truths;
      for (const auto& s : split.train) {
        streams.push_back(&s.stream);
        contexts.push_back(&s.contexts);
        truths.push_back(&s.truth);
      }
      auto set = build_training_set(streams, contexts, truths, params.deriv_lag);
      auto forest = train_forest(set, params, cfg.n_joints);

      long correct = 0, total = 0;
      for (const auto& s : split.test) {
        auto detection = run_detector(forest, s.stream, 0.5);
        for (int t = 0; t < static_cast<int>(s.stream.size()); ++t) {
          correct += detection.causal_labels[t] == s.truth.label_of(t);
          ++total;
        }
      }
      row.mean_accuracy += static_cast<double>(correct) / static_cast<double>(total);

      // Per-frame pipeline time: median over several full passes.
      std::vector<double> pass_times;
      std::size_t frames = 0;
      for (const auto& s : split.test) frames += s.stream.size();
      for (int pass = 0; pass < 5; ++pass) {
        auto t0 = Clock::now();
        for (const auto& s : split.test) run_detector(forest, s.stream, 0.5);
        auto t1 = Clock::now();
        pass_times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count() /
                             static_cast<double>(frames));
      }
      std::sort(pass_times.begin(), pass_times.end());
      row.mean_frame_time_us += pass_times[pass_times.size() / 2];
    }
    row.mean_accuracy /= n_seeds;
    row.mean_frame_time_us /= n_seeds;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace oadf
