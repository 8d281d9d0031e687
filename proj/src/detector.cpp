#include "oadf/detector.hpp"

#include <algorithm>
#include <cmath>

#include "oadf/error.hpp"
#include "oadf/features.hpp"

namespace oadf {

namespace {

int argmax_lowest(std::span<const double> dist) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(dist.size()); ++c)
    if (dist[c] > dist[best]) best = c;
  return best;
}

}  // namespace

void predict_frame_into(const Forest& forest, std::span<const double> x, FramePrediction& out,
                        std::size_t* comparisons) {
  if (x.size() != forest.feature_dim) throw InputError("feature dimension mismatch");
  if (forest.trees.empty()) throw InputError("forest has no trees");

  out.class_dist.assign(forest.n_classes, 0.0);
  double loc = 0.0;
  for (const auto& tree : forest.trees) {
    const auto& leaf = tree.traverse(x, comparisons);
    for (std::uint32_t c = 0; c < forest.n_classes; ++c) out.class_dist[c] += leaf.class_dist[c];
    loc += leaf.mean_loc;
  }
  const double inv = 1.0 / static_cast<double>(forest.trees.size());
  for (auto& v : out.class_dist) v *= inv;
  out.mean_loc = loc * inv;
  out.argmax_class = argmax_lowest(out.class_dist);
}

FramePrediction predict_frame(const Forest& forest, std::span<const double> x) {
  FramePrediction pred;
  predict_frame_into(forest, x, pred);
  return pred;
}

DetectorState::DetectorState(double beta, int n_classes) : beta_(beta) {
  if (!(beta >= 0.0 && beta <= 0.5)) throw InputError("beta must lie in [0, 0.5]");
  if (n_classes < 1) throw InputError("detector needs at least one class");
  aggregate_dist_.assign(n_classes, 0.0);
}

DetectedSegment DetectorState::close_segment(int end) const {
  DetectedSegment seg;
  seg.start = segment_start_;
  seg.end = end;
  seg.class_id = argmax_lowest(aggregate_dist_);
  const double frames = static_cast<double>(end - segment_start_ + 1);
  seg.score = aggregate_dist_[seg.class_id] / frames;
  return seg;
}

int DetectorState::step(int t, const FramePrediction& pred, std::optional<DetectedSegment>& closed) {
  if (t != next_t_) throw InputError("detector frames must be consumed in order");
  if (pred.class_dist.size() != aggregate_dist_.size())
    throw InputError("prediction class count mismatch");
  ++next_t_;
  closed.reset();

  const bool boundary = pred.mean_loc < beta_ || pred.mean_loc >= 1.0 - beta_;
  if (pred.argmax_class != current_class_ && boundary) {
    if (t > segment_start_) closed = close_segment(t - 1);
    std::fill(aggregate_dist_.begin(), aggregate_dist_.end(), 0.0);
    current_class_ = pred.argmax_class;
    segment_start_ = t;
  }
  for (std::size_t c = 0; c < aggregate_dist_.size(); ++c) aggregate_dist_[c] += pred.class_dist[c];
  emitted_.push_back(current_class_);
  return current_class_;
}

DetectedSegment DetectorState::finalize(int last_t) {
  if (next_t_ == 0 || last_t != next_t_ - 1) throw InputError("finalize requires a consumed stream");
  return close_segment(last_t);
}

DetectionResult run_detector(const Forest& forest, const SkeletonStream& stream, double beta) {
  DetectionResult out;
  const int n = static_cast<int>(stream.size());
  out.causal_labels.reserve(n);
  out.mean_locs.reserve(n);

  DetectorState state(beta, static_cast<int>(forest.n_classes));
  FramePrediction pred;
  std::optional<DetectedSegment> closed;
  for (int t = 0; t < n; ++t) {
    auto x = extract_frame_feature(stream, t, forest.params.deriv_lag);
    predict_frame_into(forest, x.values, pred);
    out.causal_labels.push_back(state.step(t, pred, closed));
    out.mean_locs.push_back(pred.mean_loc);
    if (closed) out.segments.push_back(*closed);
  }
  if (n > 0) out.segments.push_back(state.finalize(n - 1));
  return out;
}

double calibrate_over_predictions(const std::vector<std::vector<FramePrediction>>& predictions,
                                  const std::vector<std::vector<int>>& gt_labels, int n_classes) {
  if (predictions.empty()) throw InputError("calibration needs at least one labeled stream");
  if (predictions.size() != gt_labels.size()) throw InputError("predictions/labels mismatch");
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i].size() != gt_labels[i].size() || predictions[i].empty())
      throw InputError("calibration stream length mismatch");

  double best_beta = 0.0;
  long best_errors = -1;
  for (int grid = 0; grid <= 50; ++grid) {
    const double beta = grid / 100.0;
    long errors = 0;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
      DetectorState state(beta, n_classes);
      std::optional<DetectedSegment> closed;
      for (std::size_t t = 0; t < predictions[s].size(); ++t) {
        int label = state.step(static_cast<int>(t), predictions[s][t], closed);
        if (label != gt_labels[s][t]) ++errors;
      }
    }
    if (best_errors < 0 || errors < best_errors) {  // ties keep the smaller beta
      best_errors = errors;
      best_beta = beta;
    }
  }
  return best_beta;
}

double calibrate_beta(const Forest& forest, const std::vector<const SkeletonStream*>& streams,
                      const std::vector<const GroundTruth*>& truths) {
  if (streams.empty()) throw InputError("calibration needs at least one labeled stream");
  if (streams.size() != truths.size()) throw InputError("streams/truths mismatch");

  std::vector<std::vector<FramePrediction>> predictions(streams.size());
  std::vector<std::vector<int>> labels(streams.size());
  for (std::size_t s = 0; s < streams.size(); ++s) {
    if (truths[s] == nullptr) throw InputError("calibration stream lacks ground truth");
    const auto& stream = *streams[s];
    predictions[s].resize(stream.size());
    labels[s].resize(stream.size());
    for (int t = 0; t < static_cast<int>(stream.size()); ++t) {
      auto x = extract_frame_feature(stream, t, forest.params.deriv_lag);
      predict_frame_into(forest, x.values, predictions[s][t]);
      labels[s][t] = truths[s]->label_of(t);
    }
  }
  return calibrate_over_predictions(predictions, labels, static_cast<int>(forest.n_classes));
}

}  // namespace oadf
