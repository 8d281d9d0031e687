#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oadf/error.hpp"
#include "oadf/synth.hpp"

using namespace oadf;

namespace {

SynthConfig base_config() {
  SynthConfig cfg;
  cfg.n_classes = 3;
  cfg.n_joints = 2;
  cfg.segments_per_stream = 12;
  cfg.min_segment_frames = 20;
  cfg.max_segment_frames = 40;
  cfg.noise_scale = 0.1;
  cfg.context_dim = 8;
  cfg.context_snr = 4.0;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("equal seeds produce bit-identical triples") {
  auto cfg = base_config();
  auto a = generate_synthetic(cfg);
  auto b = generate_synthetic(cfg);
  REQUIRE(a.stream.size() == b.stream.size());
  for (std::size_t t = 0; t < a.stream.size(); ++t)
    for (int j = 0; j < cfg.n_joints; ++j)
      for (int k = 0; k < 3; ++k)
        CHECK(a.stream.frames[t].joints[j][k] == b.stream.frames[t].joints[j][k]);
  CHECK(a.contexts.data == b.contexts.data);
  REQUIRE(a.truth.segments.size() == b.truth.segments.size());
  for (std::size_t i = 0; i < a.truth.segments.size(); ++i) {
    CHECK(a.truth.segments[i].start == b.truth.segments[i].start);
    CHECK(a.truth.segments[i].end == b.truth.segments[i].end);
    CHECK(a.truth.segments[i].class_id == b.truth.segments[i].class_id);
  }
}

TEST_CASE("stream indices produce distinct streams with shared templates") {
  auto cfg = base_config();
  auto a = generate_synthetic(cfg, 0);
  auto b = generate_synthetic(cfg, 1);
  CHECK(a.contexts.data != b.contexts.data);
  // Same dataset seed keeps class geometry shared across streams.
  CHECK(context_mean(cfg, 1) == context_mean(cfg, 1));
}

TEST_CASE("ground truth tiles the stream with alternating background") {
  auto cfg = base_config();
  auto r = generate_synthetic(cfg);
  int cursor = 0;
  int actions = 0;
  for (std::size_t i = 0; i < r.truth.segments.size(); ++i) {
    const auto& s = r.truth.segments[i];
    CHECK(s.start == cursor);
    cursor = s.end + 1;
    CHECK(s.length() >= cfg.min_segment_frames);
    CHECK(s.length() <= cfg.max_segment_frames);
    if (i % 2 == 0)
      CHECK(s.class_id == 0);
    else {
      CHECK(s.class_id >= 1);
      CHECK(s.class_id <= cfg.n_classes);
      ++actions;
    }
  }
  CHECK(cursor == static_cast<int>(r.stream.size()));
  CHECK(actions == cfg.segments_per_stream);
  CHECK(r.contexts.rows() == r.stream.size());
}

TEST_CASE("ambiguity pairs share templates exactly on the middle half") {
  auto cfg = base_config();
  cfg.ambiguity_pairs = {{1, 2}};
  for (double tau : {0.25, 0.3, 0.5, 0.66, 0.75})
    for (int j = 0; j < cfg.n_joints; ++j) {
      auto a = template_position(cfg, 1, j, tau);
      auto b = template_position(cfg, 2, j, tau);
      CHECK(a[0] == b[0]);
      CHECK(a[1] == b[1]);
      CHECK(a[2] == b[2]);
    }
  // Outside the middle half the classes keep their own shapes.
  auto a0 = template_position(cfg, 1, 0, 0.05);
  auto b0 = template_position(cfg, 2, 0, 0.05);
  CHECK(a0[0] != b0[0]);
  // The borrowed branch stays continuous at the boundary.
  auto near = template_position(cfg, 2, 0, 0.2499);
  auto at = template_position(cfg, 2, 0, 0.25);
  CHECK(std::abs(near[0] - at[0]) < 0.05);
}

TEST_CASE("context snr controls class separation") {
  auto cfg = base_config();

  auto class_mean_norms = [&](const SynthResult& r) {
    std::vector<std::vector<double>> sums(cfg.n_classes + 1,
                                          std::vector<double>(cfg.context_dim, 0.0));
    std::vector<int> counts(cfg.n_classes + 1, 0);
    for (const auto& seg : r.truth.segments)
      for (int t = seg.start; t <= seg.end; ++t) {
        auto row = r.contexts.row(t);
        for (int d = 0; d < cfg.context_dim; ++d) sums[seg.class_id][d] += row[d];
        ++counts[seg.class_id];
      }
    std::vector<double> norms;
    for (int c = 0; c <= cfg.n_classes; ++c) {
      REQUIRE(counts[c] >= 50);
      double sq = 0.0;
      for (int d = 0; d < cfg.context_dim; ++d) {
        double m = sums[c][d] / counts[c];
        sq += m * m;
      }
      norms.push_back(std::sqrt(sq));
    }
    return norms;
  };

  SUBCASE("snr 0 means pure noise") {
    cfg.context_snr = 0.0;
    auto r = generate_synthetic(cfg);
    for (double n : class_mean_norms(r)) CHECK(n < 0.6);
  }
  SUBCASE("snr 4 separates class means") {
    cfg.context_snr = 4.0;
    auto r = generate_synthetic(cfg);
    for (double n : class_mean_norms(r)) {
      CHECK(n > 3.0);
      CHECK(n < 5.0);
    }
  }
}

TEST_CASE("invalid configs are rejected") {
  auto cfg = base_config();
  SUBCASE("zero classes") {
    cfg.n_classes = 0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
  }
  SUBCASE("negative snr") {
    cfg.context_snr = -1;
    CHECK_THROWS_AS(cfg.validate(), InputError);
  }
  SUBCASE("inverted frame range") {
    cfg.min_segment_frames = 10;
    cfg.max_segment_frames = 5;
    CHECK_THROWS_AS(cfg.validate(), InputError);
  }
  SUBCASE("ambiguity pair out of range") {
    cfg.ambiguity_pairs = {{0, 1}};
    CHECK_THROWS_AS(cfg.validate(), InputError);
  }
  SUBCASE("class reused across pairs") {
    cfg.n_classes = 4;
    cfg.ambiguity_pairs = {{1, 2}, {2, 3}};
    CHECK_THROWS_AS(cfg.validate(), InputError);
  }
}
