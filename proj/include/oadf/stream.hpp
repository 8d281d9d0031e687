#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oadf {

struct JointFrame {
  std::vector<std::array<double, 3>> joints;  // (x, y, depth) per joint
  int t = 0;
};

struct SkeletonStream {
  std::vector<JointFrame> frames;
  double frame_rate = 30.0;
  std::string stream_id;

  std::size_t size() const { return frames.size(); }
  int n_joints() const { return frames.empty() ? 0 : static_cast<int>(frames[0].joints.size()); }
};

// Inclusive [start, end] frame range carrying one class. Class id 0 is the
// reserved background ("no-action") class.
struct Segment {
  int start = 0;
  int end = 0;
  int class_id = 0;

  int length() const { return end - start + 1; }
};

struct GroundTruth {
  std::vector<Segment> segments;  // sorted, disjoint, tiling [0, stream length)

  int label_of(int t) const;
  const Segment& segment_of(int t) const;
  int max_class() const;
};

struct ContextMatrix {
  std::size_t dim = 0;
  std::vector<double> data;  // row-major, rows() x dim

  std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

struct LoadedStream {
  SkeletonStream stream;
  std::optional<GroundTruth> truth;
};

// Text format: header `oadf v1 n_joints=<n> fps=<f>`, one `t x y d ...` line
// per frame, optional `#segments` block of `start end class_id` lines.
// Missing ranges are materialized as background segments on load.
LoadedStream load_skeleton_stream(const std::filesystem::path& path);
void write_skeleton_stream(const std::filesystem::path& path, const SkeletonStream& stream,
                           const GroundTruth* truth = nullptr);

// Text format: header `ctx v1 dim=<d> rows=<T>`, one whitespace-separated row
// per line. Row count must match the stream length.
ContextMatrix load_context_matrix(const std::filesystem::path& path, const SkeletonStream& stream);
void write_context_matrix(const std::filesystem::path& path, const ContextMatrix& ctx);

// Validates the GroundTruth invariants against a stream length and fills
// background gaps; throws FormatError (with the given path for context) on
// overlap or out-of-range segments.
GroundTruth normalize_ground_truth(std::vector<Segment> segments, int stream_length,
                                   const std::string& origin);

// Incremental parsing for live input: the header line, then one frame line
// at a time. `origin` and `line_no` feed error messages.
struct StreamHeader {
  int n_joints = 0;
  double fps = 0.0;
};
StreamHeader parse_stream_header(const std::string& line, const std::string& origin);
JointFrame parse_frame_line(const std::string& line, int n_joints, int expected_t,
                            const std::string& origin, std::size_t line_no);

}  // namespace oadf
