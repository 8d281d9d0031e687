#pragma once

#include <vector>

#include "oadf/forest.hpp"
#include "oadf/synth.hpp"

namespace oadf {

struct LatencyStats {
  double mean_us = 0.0;
  double median_us = 0.0;
  double p99_us = 0.0;
  std::size_t n_measurements = 0;
  std::size_t max_comparisons = 0;     // worst per-frame comparison count seen
  std::size_t comparison_budget = 0;   // n_trees * max_depth
};

// Wall-clock time of the per-frame pipeline (feature extraction, forest
// averaging, detector step), measured single-threaded over `repetitions`
// passes of the stream. File parsing is not measured.
LatencyStats benchmark_latency(const Forest& forest, const SkeletonStream& stream,
                               int repetitions);

// Synthetic train/test split: stream indices 0..n_train-1 train the forest,
// the following n_test streams evaluate it.
struct SyntheticSplit {
  std::vector<SynthResult> train;
  std::vector<SynthResult> test;
};
SyntheticSplit make_synthetic_split(const SynthConfig& config, int n_train, int n_test);

struct TrialResult {
  double frame_f1 = 0.0;        // pooled non-background frame F1, causal labels
  double frame_accuracy = 0.0;  // all-frame accuracy of causal labels
  double beta = 0.5;
};

// Trains on the synthetic split, optionally calibrates beta on the training
// streams, and scores causal labels on the test streams.
TrialResult run_synthetic_trial(const SynthConfig& config, const ForestParams& params, int n_train,
                                int n_test, bool calibrate);

struct SweepRow {
  int trees = 0;
  double mean_accuracy = 0.0;
  double mean_frame_time_us = 0.0;
};

// Accuracy/time curve over tree counts: per count, means over n_seeds trials
// (synthetic seed and forest seed both varied). Accuracy is raw per-frame
// argmax accuracy (beta = 0.5); time is the measured per-frame pipeline cost.
std::vector<SweepRow> sweep_trees(const SynthConfig& config, const ForestParams& base,
                                  const std::vector<int>& tree_counts, int n_seeds, int n_train,
                                  int n_test);

}  // namespace oadf
