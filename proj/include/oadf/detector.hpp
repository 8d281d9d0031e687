#pragma once

#include <optional>
#include <span>
#include <vector>

#include "oadf/forest.hpp"
#include "oadf/stream.hpp"

namespace oadf {

struct FramePrediction {
  std::vector<double> class_dist;  // mean of per-tree leaf distributions
  double mean_loc = 0.0;           // mean of per-tree leaf locations
  int argmax_class = 0;            // lowest class id wins ties
};

FramePrediction predict_frame(const Forest& forest, std::span<const double> x);
void predict_frame_into(const Forest& forest, std::span<const double> x, FramePrediction& out,
                        std::size_t* comparisons = nullptr);

struct DetectedSegment {
  int start = 0;
  int end = 0;
  int class_id = 0;
  double score = 0.0;  // mean probability of the chosen class over the segment
};

// Online segmentation state machine. A class change is accepted only when the
// predicted location indicates a segment boundary: mean_loc < beta or
// mean_loc >= 1 - beta. On acceptance the closed segment is relabeled with
// the argmax of its aggregated distribution. beta = 0.5 reduces to raw
// per-frame argmax labels; beta = 0 keeps the whole stream in one segment.
class DetectorState {
 public:
  DetectorState(double beta, int n_classes);

  // Consumes the prediction for frame t (contiguous from 0) and returns the
  // causal label; fills `closed` when a segment was finalized.
  int step(int t, const FramePrediction& pred, std::optional<DetectedSegment>& closed);

  // Closes the open segment once the stream has ended at frame last_t.
  DetectedSegment finalize(int last_t);

  double beta() const { return beta_; }
  const std::vector<int>& emitted() const { return emitted_; }

 private:
  DetectedSegment close_segment(int end) const;

  double beta_;
  int current_class_ = 0;
  int segment_start_ = 0;
  int next_t_ = 0;
  std::vector<double> aggregate_dist_;
  std::vector<int> emitted_;
};

struct DetectionResult {
  std::vector<int> causal_labels;
  std::vector<double> mean_locs;
  std::vector<DetectedSegment> segments;
};

// Runs the full per-frame pipeline (feature extraction with the forest's
// trained lag, forest averaging, gated segmentation) over a stream.
DetectionResult run_detector(const Forest& forest, const SkeletonStream& stream, double beta);

// Grid search over beta in {0.00, 0.01, ..., 0.50} minimizing the frame-level
// error of the causal labels; ties resolve to the smallest beta.
double calibrate_beta(const Forest& forest, const std::vector<const SkeletonStream*>& streams,
                      const std::vector<const GroundTruth*>& truths);

// Same search over precomputed per-frame predictions (grid evaluation core).
double calibrate_over_predictions(const std::vector<std::vector<FramePrediction>>& predictions,
                                  const std::vector<std::vector<int>>& gt_labels, int n_classes);

}  // namespace oadf
