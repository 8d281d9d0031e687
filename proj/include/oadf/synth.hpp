#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "oadf/stream.hpp"

namespace oadf {

// Synthetic stream generator. Action classes carry ids 1..n_classes; the
// background class 0 is interleaved between action segments. Classes listed
// in ambiguity_pairs share identical expected joint trajectories on the
// middle 50% of their segments and differ only in spatial context mean,
// which makes them indistinguishable from skeleton features alone there.
struct SynthConfig {
  int n_classes = 4;           // action classes, ids 1..n_classes
  int n_joints = 5;
  int segments_per_stream = 8; // action segments; background fills the gaps
  int min_segment_frames = 30;
  int max_segment_frames = 60;
  double noise_scale = 0.1;    // stddev of per-coordinate joint noise
  int context_dim = 8;
  double context_snr = 4.0;    // spatial signal norm vs unit per-dim noise
  std::vector<std::pair<int, int>> ambiguity_pairs;
  std::uint64_t seed = 0;
  double fps = 30.0;

  void validate() const;  // throws InputError
};

struct SynthResult {
  SkeletonStream stream;
  ContextMatrix contexts;
  GroundTruth truth;
};

// Deterministic for a fixed (config, stream_index): class templates and
// context means depend only on config.seed, so streams of one dataset share
// them; per-stream layout and noise depend on stream_index as well.
SynthResult generate_synthetic(const SynthConfig& config, int stream_index = 0);

// Expected (noise-free) joint position for a class at relative time
// tau in [0, 1]. This is the trajectory the generator samples around and the
// reference for checking template sharing between ambiguous classes.
std::array<double, 3> template_position(const SynthConfig& config, int class_id, int joint,
                                        double tau);

// Class-specific unit-norm spatial context direction.
std::vector<double> context_mean(const SynthConfig& config, int class_id);

}  // namespace oadf
