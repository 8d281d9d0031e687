#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oadf/error.hpp"
#include "oadf/rng.hpp"
#include "oadf/stream.hpp"

using namespace oadf;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  auto path = fs::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal well-formed stream parses") {
  auto path = write_temp("ok.stream",
                         "oadf v1 n_joints=2 fps=30\n"
                         "0 1 2 3 4 5 6\n"
                         "1 1 2 3 4 5 6\n"
                         "2 0.5 0 -1 2.25 1e-3 9\n");
  auto loaded = load_skeleton_stream(path);
  CHECK(loaded.stream.n_joints() == 2);
  CHECK(loaded.stream.size() == 3);
  CHECK(loaded.stream.frame_rate == 30.0);
  CHECK(loaded.stream.frames[2].joints[1][1] == 1e-3);
  CHECK(!loaded.truth.has_value());
}

TEST_CASE("inconsistent joint count reports the line") {
  auto path = write_temp("bad_joints.stream",
                         "oadf v1 n_joints=2 fps=30\n"
                         "0 1 2 3 4 5 6\n"
                         "1 1 2 3\n");
  try {
    load_skeleton_stream(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    std::string msg = e.what();
    CHECK(msg.find("inconsistent joint count") != std::string::npos);
    CHECK(msg.find(":3:") != std::string::npos);
  }
}

TEST_CASE("malformed header rejected") {
  auto path = write_temp("bad_header.stream", "oadf v2 n_joints=2 fps=30\n0 1 2 3 4 5 6\n");
  CHECK_THROWS_AS(load_skeleton_stream(path), FormatError);
}

TEST_CASE("non-finite coordinate rejected") {
  auto path = write_temp("nan.stream", "oadf v1 n_joints=1 fps=30\n0 1 nan 3\n");
  CHECK_THROWS_AS(load_skeleton_stream(path), FormatError);
}

TEST_CASE("out-of-order frame index rejected") {
  auto path = write_temp("order.stream", "oadf v1 n_joints=1 fps=30\n0 1 2 3\n2 1 2 3\n");
  CHECK_THROWS_AS(load_skeleton_stream(path), FormatError);
}

TEST_CASE("segments tile the stream exactly") {
  auto path = write_temp("tiled.stream",
                         "oadf v1 n_joints=1 fps=30\n"
                         "0 1 2 3\n1 1 2 3\n2 1 2 3\n3 1 2 3\n4 1 2 3\n"
                         "5 1 2 3\n6 1 2 3\n7 1 2 3\n8 1 2 3\n9 1 2 3\n"
                         "#segments\n"
                         "0 4 1\n"
                         "5 9 2\n");
  auto loaded = load_skeleton_stream(path);
  REQUIRE(loaded.truth.has_value());
  const auto& segs = loaded.truth->segments;
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].start == 0);
  CHECK(segs[0].end == 4);
  CHECK(segs[0].class_id == 1);
  CHECK(segs[1].start == 5);
  CHECK(segs[1].end == 9);
  CHECK(loaded.truth->label_of(4) == 1);
  CHECK(loaded.truth->label_of(5) == 2);
}

TEST_CASE("background gaps are materialized as class 0") {
  auto path = write_temp("gaps.stream",
                         "oadf v1 n_joints=1 fps=30\n"
                         "0 1 2 3\n1 1 2 3\n2 1 2 3\n3 1 2 3\n4 1 2 3\n"
                         "5 1 2 3\n6 1 2 3\n7 1 2 3\n8 1 2 3\n9 1 2 3\n"
                         "#segments\n"
                         "1 3 1\n"
                         "6 8 2\n");
  auto loaded = load_skeleton_stream(path);
  REQUIRE(loaded.truth.has_value());
  const auto& segs = loaded.truth->segments;
  REQUIRE(segs.size() == 5);
  CHECK(segs[0].class_id == 0);
  CHECK(segs[0].start == 0);
  CHECK(segs[0].end == 0);
  CHECK(segs[2].class_id == 0);
  CHECK(segs[4].class_id == 0);
  int cursor = 0;
  for (const auto& s : segs) {
    CHECK(s.start == cursor);
    cursor = s.end + 1;
  }
  CHECK(cursor == 10);
}

TEST_CASE("overlapping segments rejected") {
  auto path = write_temp("overlap.stream",
                         "oadf v1 n_joints=1 fps=30\n"
                         "0 1 2 3\n1 1 2 3\n2 1 2 3\n"
                         "#segments\n"
                         "0 1 1\n"
                         "1 2 2\n");
  try {
    load_skeleton_stream(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("overlapping") != std::string::npos);
  }
}

TEST_CASE("write/load/write round-trips byte-for-byte") {
  Rng rng(77);
  SkeletonStream stream;
  stream.frame_rate = 25.0;
  stream.stream_id = "roundtrip";
  for (int t = 0; t < 20; ++t) {
    JointFrame f;
    f.t = t;
    for (int j = 0; j < 3; ++j)
      f.joints.push_back({rng.normal(), rng.normal() * 1e4, rng.uniform()});
    stream.frames.push_back(f);
  }
  GroundTruth truth;
  truth.segments = {{0, 7, 1}, {8, 12, 0}, {13, 19, 2}};

  auto p1 = fs::temp_directory_path() / "rt1.stream";
  auto p2 = fs::temp_directory_path() / "rt2.stream";
  write_skeleton_stream(p1, stream, &truth);
  auto loaded = load_skeleton_stream(p1);
  REQUIRE(loaded.truth.has_value());
  write_skeleton_stream(p2, loaded.stream, &*loaded.truth);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("context matrix loads when aligned") {
  SkeletonStream stream;
  stream.frame_rate = 30;
  for (int t = 0; t < 10; ++t) {
    JointFrame f;
    f.t = t;
    f.joints.push_back({0, 0, 0});
    stream.frames.push_back(f);
  }

  SUBCASE("wide rows accepted") {
    std::string text = "ctx v1 dim=8192 rows=10\n";
    for (int r = 0; r < 10; ++r) {
      std::string row;
      for (int d = 0; d < 8192; ++d) row += (d ? " 0.5" : "0.5");
      text += row + "\n";
    }
    auto path = write_temp("wide.ctx", text);
    auto ctx = load_context_matrix(path, stream);
    CHECK(ctx.dim == 8192);
    CHECK(ctx.rows() == 10);
  }

  SUBCASE("row-count mismatch is an input error") {
    std::string text = "ctx v1 dim=2 rows=9\n";
    for (int r = 0; r < 9; ++r) text += "1 2\n";
    auto path = write_temp("short.ctx", text);
    CHECK_THROWS_AS(load_context_matrix(path, stream), InputError);
  }

  SUBCASE("small dimension accepted") {
    SkeletonStream one;
    one.frame_rate = 30;
    JointFrame f;
    f.t = 0;
    f.joints.push_back({0, 0, 0});
    one.frames.push_back(f);
    auto path = write_temp("tiny.ctx", "ctx v1 dim=4 rows=1\n0.25 -1 3 4.5\n");
    auto ctx = load_context_matrix(path, one);
    CHECK(ctx.dim == 4);
    CHECK(ctx.row(0)[0] == 0.25);
  }

  SUBCASE("non-finite entry rejected") {
    auto path = write_temp("inf.ctx", "ctx v1 dim=1 rows=10\n1\n2\n3\ninf\n5\n6\n7\n8\n9\n10\n");
    CHECK_THROWS_AS(load_context_matrix(path, stream), FormatError);
  }

  SUBCASE("context round-trip preserves values") {
    ContextMatrix ctx;
    ctx.dim = 3;
    Rng rng(5);
    for (int i = 0; i < 30; ++i) ctx.data.push_back(rng.normal());
    auto path = fs::temp_directory_path() / "rt.ctx";
    write_context_matrix(path, ctx);
    auto back = load_context_matrix(path, stream);
    CHECK(back.data == ctx.data);
  }
}
