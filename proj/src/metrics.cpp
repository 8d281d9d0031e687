#include "oadf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "oadf/error.hpp"

namespace oadf {

FrameScores frame_fscore(std::span<const int> pred, std::span<const int> gt, int n_classes,
                         bool include_background) {
  if (pred.size() != gt.size()) throw InputError("frame_fscore: label length mismatch");

  FrameScores out;
  out.confusion.assign(n_classes, std::vector<long>(n_classes, 0));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] < 0 || gt[i] >= n_classes || pred[i] < 0 || pred[i] >= n_classes)
      throw InputError("frame_fscore: label outside class range");
    ++out.confusion[gt[i]][pred[i]];
  }

  long pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
  for (int c = 0; c < n_classes; ++c) {
    long tp = out.confusion[c][c];
    long fp = 0, fn = 0;
    for (int o = 0; o < n_classes; ++o) {
      if (o == c) continue;
      fp += out.confusion[o][c];
      fn += out.confusion[c][o];
    }
    if (tp + fp + fn > 0)
      out.per_class_f1[c] = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    if (c != 0 || include_background) {
      pooled_tp += tp;
      pooled_fp += fp;
      pooled_fn += fn;
    }
  }
  out.overall_f1 = (pooled_tp + pooled_fp + pooled_fn) > 0
                       ? 2.0 * pooled_tp / static_cast<double>(2 * pooled_tp + pooled_fp + pooled_fn)
                       : 0.0;
  return out;
}

std::vector<EventAnchor> anchors_from_segments(const std::vector<Segment>& segments) {
  std::vector<EventAnchor> anchors;
  for (const auto& s : segments)
    if (s.class_id != 0) anchors.push_back({s.start, s.class_id});
  return anchors;
}

EventScores event_fscore(const std::vector<DetectedSegment>& pred,
                         const std::vector<EventAnchor>& gt_anchors, double delta_ms, double fps) {
  if (!(fps > 0)) throw InputError("event_fscore: fps must be positive");
  const double tolerance_frames = delta_ms * fps / 1000.0;

  std::vector<EventAnchor> preds;
  for (const auto& s : pred)
    if (s.class_id != 0) preds.push_back({s.start, s.class_id});
  std::sort(preds.begin(), preds.end(), [](const auto& a, const auto& b) { return a.frame < b.frame; });
  auto gts = gt_anchors;
  std::sort(gts.begin(), gts.end(), [](const auto& a, const auto& b) { return a.frame < b.frame; });

  EventScores out;
  out.n_pred = static_cast<int>(preds.size());
  out.n_gt = static_cast<int>(gts.size());

  std::vector<bool> taken(gts.size(), false);
  for (const auto& p : preds) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].class_id != p.class_id) continue;
      if (std::abs(p.frame - gts[g].frame) <= tolerance_frames) {
        taken[g] = true;
        ++out.matched;
        out.matches.emplace_back(p.frame, gts[g].frame);
        break;
      }
    }
  }

  if (out.n_pred == 0 && out.n_gt == 0) {
    out.f1 = 1.0;
  } else {
    double precision = out.n_pred > 0 ? static_cast<double>(out.matched) / out.n_pred : 0.0;
    double recall = out.n_gt > 0 ? static_cast<double>(out.matched) / out.n_gt : 0.0;
    out.f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return out;
}

BoundaryScores boundary_scores(const std::vector<DetectedSegment>& pred,
                               const std::vector<Segment>& gt) {
  double sl_sum = 0.0, el_sum = 0.0;
  int n_actions = 0;
  for (const auto& g : gt) {
    if (g.class_id == 0) continue;
    ++n_actions;
    long best_overlap = 0;
    const DetectedSegment* best = nullptr;
    for (const auto& p : pred) {
      if (p.class_id != g.class_id) continue;
      long overlap = std::min(p.end, g.end) - std::max(p.start, g.start) + 1;
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best = &p;
      }
    }
    if (best != nullptr) {
      const double len = static_cast<double>(g.end - g.start + 1);
      sl_sum += std::max(0.0, 1.0 - std::abs(best->start - g.start) / len);
      el_sum += std::max(0.0, 1.0 - std::abs(best->end - g.end) / len);
    }
  }
  if (n_actions == 0) return {0.0, 0.0};
  return {sl_sum / n_actions, el_sum / n_actions};
}

}  // namespace oadf
