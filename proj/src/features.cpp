#include "oadf/features.hpp"

#include <algorithm>

#include "oadf/error.hpp"

namespace oadf {

FrameFeature extract_frame_feature(const SkeletonStream& stream, int t, int lag) {
  if (t < 0 || static_cast<std::size_t>(t) >= stream.size())
    throw InputError("frame index out of range");
  if (lag < 1) throw InputError("derivative lag must be >= 1");

  const int n = stream.n_joints();
  const auto& now = stream.frames[t].joints;
  const auto& past = stream.frames[std::max(0, t - lag)].joints;
  const auto& past2 = stream.frames[std::max(0, t - 2 * lag)].joints;

  FrameFeature f;
  f.values.resize(9 * static_cast<std::size_t>(n));
  const double inv_lag = 1.0 / lag;
  const double inv_lag2 = inv_lag * inv_lag;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < 3; ++k) {
      const double p = now[j][k];
      f.values[3 * j + k] = p;
      f.values[3 * (n + j) + k] = (p - past[j][k]) * inv_lag;
      f.values[3 * (2 * n + j) + k] = (p - 2.0 * past[j][k] + past2[j][k]) * inv_lag2;
    }
  }
  return f;
}

double temporal_context(const Segment& segment, int t) {
  if (t < segment.start || t > segment.end) throw InputError("frame outside segment");
  return static_cast<double>(t - segment.start) / segment.length();
}

ContextVector assemble_context(std::span<const double> spatial_row, const GroundTruth& truth,
                               int t) {
  ContextVector z;
  z.spatial.assign(spatial_row.begin(), spatial_row.end());
  z.temporal = temporal_context(truth.segment_of(t), t);
  return z;
}

}  // namespace oadf
