#pragma once

#include <span>
#include <vector>

#include "oadf/stream.hpp"

namespace oadf {

// Test-time per-frame descriptor: joint positions plus causal first and
// second finite differences, 9 * n_joints values as [p, dp, ddp].
struct FrameFeature {
  std::vector<double> values;
};

// Training-only context: spatial embedding row plus the frame's relative
// location inside its segment.
struct ContextVector {
  std::vector<double> spatial;
  double temporal = 0.0;
};

// Derivatives use backward differences over `lag` frames so no future frame
// is ever touched; indices before the stream start clamp to frame 0.
FrameFeature extract_frame_feature(const SkeletonStream& stream, int t, int lag = 1);

// (t - start) / (end - start + 1), in [0, 1). Throws InputError when t lies
// outside the segment.
double temporal_context(const Segment& segment, int t);

ContextVector assemble_context(std::span<const double> spatial_row, const GroundTruth& truth,
                               int t);

}  // namespace oadf
