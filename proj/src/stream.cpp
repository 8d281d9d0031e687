#include "oadf/stream.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "oadf/error.hpp"

namespace oadf {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& path, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw parse_error(path, line, "expected a number, got '" + tok + "'");
  if (!std::isfinite(value)) throw parse_error(path, line, "non-finite value '" + tok + "'");
  return value;
}

long parse_long(const std::string& tok, const std::string& path, std::size_t line) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw parse_error(path, line, "expected an integer, got '" + tok + "'");
  return value;
}

// Parses `key=value`, enforcing the key.
std::string keyed_value(const std::string& tok, const std::string& key, const std::string& path,
                        std::size_t line) {
  auto pos = tok.find('=');
  if (pos == std::string::npos || tok.substr(0, pos) != key)
    throw parse_error(path, line, "expected '" + key + "=<value>', got '" + tok + "'");
  return tok.substr(pos + 1);
}

}  // namespace

int GroundTruth::label_of(int t) const { return segment_of(t).class_id; }

const Segment& GroundTruth::segment_of(int t) const {
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](int v, const Segment& s) { return v < s.start; });
  if (it == segments.begin()) throw InputError("frame index before first segment");
  --it;
  if (t > it->end) throw InputError("frame index not covered by any segment");
  return *it;
}

int GroundTruth::max_class() const {
  int m = 0;
  for (const auto& s : segments) m = std::max(m, s.class_id);
  return m;
}

GroundTruth normalize_ground_truth(std::vector<Segment> segments, int stream_length,
                                   const std::string& origin) {
  std::stable_sort(segments.begin(), segments.end(),
                   [](const Segment& a, const Segment& b) { return a.start < b.start; });
  GroundTruth truth;
  int cursor = 0;
  for (const auto& s : segments) {
    if (s.class_id < 0) throw FormatError(origin + ": negative class id");
    if (s.start > s.end) throw FormatError(origin + ": segment start after end");
    if (s.start < cursor) throw FormatError(origin + ": overlapping segments");
    if (s.end >= stream_length) throw FormatError(origin + ": segment exceeds stream length");
    if (s.start > cursor) truth.segments.push_back({cursor, s.start - 1, 0});
    truth.segments.push_back(s);
    cursor = s.end + 1;
  }
  if (cursor < stream_length) truth.segments.push_back({cursor, stream_length - 1, 0});
  return truth;
}

StreamHeader parse_stream_header(const std::string& line, const std::string& origin) {
  auto header = tokenize(line);
  if (header.size() != 4 || header[0] != "oadf" || header[1] != "v1")
    throw parse_error(origin, 1, "malformed header, expected 'oadf v1 n_joints=<n> fps=<f>'");
  StreamHeader out;
  out.n_joints = static_cast<int>(parse_long(keyed_value(header[2], "n_joints", origin, 1), origin, 1));
  out.fps = parse_double(keyed_value(header[3], "fps", origin, 1), origin, 1);
  if (out.n_joints < 1) throw parse_error(origin, 1, "n_joints must be >= 1");
  if (!(out.fps > 0)) throw parse_error(origin, 1, "fps must be positive");
  return out;
}

JointFrame parse_frame_line(const std::string& line, int n_joints, int expected_t,
                            const std::string& origin, std::size_t line_no) {
  auto toks = tokenize(line);
  if (toks.empty()) throw parse_error(origin, line_no, "empty frame line");
  long t = parse_long(toks[0], origin, line_no);
  if (t != expected_t)
    throw parse_error(origin, line_no,
                      fmt::format("frame index {} out of order (expected {})", t, expected_t));
  if (static_cast<long>(toks.size()) - 1 != 3L * n_joints)
    throw parse_error(origin, line_no,
                      fmt::format("inconsistent joint count (expected {} joints, got {} values)",
                                  n_joints, toks.size() - 1));
  JointFrame frame;
  frame.t = static_cast<int>(t);
  frame.joints.resize(n_joints);
  for (long j = 0; j < n_joints; ++j)
    for (int k = 0; k < 3; ++k)
      frame.joints[j][k] = parse_double(toks[1 + 3 * j + k], origin, line_no);
  return frame;
}

LoadedStream load_skeleton_stream(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open stream file: " + path.string());
  const std::string name = path.string();

  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw parse_error(name, 1, "empty file");
  ++line_no;
  auto header = parse_stream_header(line, name);

  SkeletonStream stream;
  stream.frame_rate = header.fps;
  stream.stream_id = path.stem().string();

  std::vector<Segment> raw_segments;
  bool in_segments = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks[0] == "#segments") {
      in_segments = true;
      continue;
    }
    if (!in_segments) {
      stream.frames.push_back(parse_frame_line(line, header.n_joints,
                                               static_cast<int>(stream.frames.size()), name,
                                               line_no));
    } else {
      if (toks.size() != 3) throw parse_error(name, line_no, "segment line needs 'start end class_id'");
      Segment s;
      s.start = static_cast<int>(parse_long(toks[0], name, line_no));
      s.end = static_cast<int>(parse_long(toks[1], name, line_no));
      s.class_id = static_cast<int>(parse_long(toks[2], name, line_no));
      if (s.start > s.end) throw parse_error(name, line_no, "segment start after end");
      if (s.class_id < 0) throw parse_error(name, line_no, "negative class id");
      raw_segments.push_back(s);
    }
  }

  if (stream.frames.empty()) throw parse_error(name, line_no, "stream has no frames");

  LoadedStream out;
  out.stream = std::move(stream);
  if (in_segments)
    out.truth = normalize_ground_truth(std::move(raw_segments),
                                       static_cast<int>(out.stream.frames.size()), name);
  return out;
}

void write_skeleton_stream(const std::filesystem::path& path, const SkeletonStream& stream,
                           const GroundTruth* truth) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw InputError("cannot write stream file: " + path.string());
  out << fmt::format("oadf v1 n_joints={} fps={}\n", stream.n_joints(), stream.frame_rate);
  for (const auto& frame : stream.frames) {
    out << frame.t;
    for (const auto& joint : frame.joints)
      out << fmt::format(" {} {} {}", joint[0], joint[1], joint[2]);
    out << '\n';
  }
  if (truth != nullptr) {
    out << "#segments\n";
    for (const auto& s : truth->segments)
      out << fmt::format("{} {} {}\n", s.start, s.end, s.class_id);
  }
  if (!out) throw InputError("write failed: " + path.string());
}

ContextMatrix load_context_matrix(const std::filesystem::path& path, const SkeletonStream& stream) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open context file: " + path.string());
  const std::string name = path.string();

  std::string line;
  if (!std::getline(in, line)) throw parse_error(name, 1, "empty file");
  auto header = tokenize(line);
  if (header.size() != 4 || header[0] != "ctx" || header[1] != "v1")
    throw parse_error(name, 1, "malformed header, expected 'ctx v1 dim=<d> rows=<T>'");
  long dim = parse_long(keyed_value(header[2], "dim", name, 1), name, 1);
  long rows = parse_long(keyed_value(header[3], "rows", name, 1), name, 1);
  if (dim < 1 || rows < 1) throw parse_error(name, 1, "dim and rows must be >= 1");

  if (static_cast<std::size_t>(rows) != stream.size())
    throw InputError(fmt::format("{}: context rows ({}) do not match stream length ({})", name,
                                 rows, stream.size()));

  ContextMatrix ctx;
  ctx.dim = static_cast<std::size_t>(dim);
  ctx.data.reserve(static_cast<std::size_t>(dim) * rows);

  std::size_t line_no = 1;
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    for (const auto& tok : toks) {
      if (seen >= static_cast<std::size_t>(dim) * rows)
        throw parse_error(name, line_no, "more values than dim*rows");
      ctx.data.push_back(parse_double(tok, name, line_no));
      ++seen;
    }
  }
  if (seen != static_cast<std::size_t>(dim) * rows)
    throw parse_error(name, line_no, fmt::format("expected {} values, got {}", dim * rows, seen));
  return ctx;
}

void write_context_matrix(const std::filesystem::path& path, const ContextMatrix& ctx) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write context file: " + path.string());
  out << fmt::format("ctx v1 dim={} rows={}\n", ctx.dim, ctx.rows());
  for (std::size_t i = 0; i < ctx.rows(); ++i) {
    auto row = ctx.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << fmt::format("{}", row[j]);
    out << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace oadf
