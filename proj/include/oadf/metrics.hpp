#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "oadf/detector.hpp"
#include "oadf/stream.hpp"

namespace oadf {

struct FrameScores {
  std::map<int, double> per_class_f1;         // classes present in gt or pred
  double overall_f1 = 0.0;                    // micro-pooled over action classes
  std::vector<std::vector<long>> confusion;   // [gt][pred]
};

// Frame-level precision/recall F1. The overall score pools true/false
// positives across classes; background (class 0) is excluded from the pool
// unless include_background is set.
FrameScores frame_fscore(std::span<const int> pred, std::span<const int> gt, int n_classes,
                         bool include_background = false);

struct EventScores {
  double f1 = 0.0;
  int matched = 0;
  int n_pred = 0;
  int n_gt = 0;
  std::vector<std::pair<int, int>> matches;  // (pred anchor, gt anchor) frames
};

struct EventAnchor {
  int frame = 0;
  int class_id = 0;
};

// Action-point style scoring: a predicted segment (anchor = start frame)
// matches an unmatched ground-truth anchor of the same class within
// delta_ms * fps / 1000 frames; matching is greedy in time order.
EventScores event_fscore(const std::vector<DetectedSegment>& pred,
                         const std::vector<EventAnchor>& gt_anchors, double delta_ms, double fps);

// Start anchors of the non-background segments.
std::vector<EventAnchor> anchors_from_segments(const std::vector<Segment>& segments);

struct BoundaryScores {
  double sl = 0.0;  // start localization
  double el = 0.0;  // end localization
};

// For each ground-truth action segment, the same-class prediction with
// maximal overlap contributes max(0, 1 - |boundary error| / gt length);
// unmatched segments contribute 0. Mean over ground-truth action segments.
BoundaryScores boundary_scores(const std::vector<DetectedSegment>& pred,
                               const std::vector<Segment>& gt);

}  // namespace oadf
