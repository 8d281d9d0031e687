#include "oadf/synth.hpp"

#include <cmath>
#include <numeric>

#include "oadf/error.hpp"
#include "oadf/rng.hpp"

namespace oadf {

namespace {

constexpr std::uint64_t kTemplateSalt = 0x7E3A11;
constexpr std::uint64_t kContextSalt = 0xC0347E;
constexpr std::uint64_t kStreamSalt = 0x57A3E0;

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Harmonic {
  double offset, amp1, freq1, phase1, amp2, freq2, phase2;

  double eval(double tau) const {
    return offset + amp1 * std::sin(kTwoPi * freq1 * tau + phase1) +
           amp2 * std::sin(kTwoPi * freq2 * tau + phase2);
  }
};

// One smooth trajectory per (class, joint, coordinate), derived from the
// dataset seed only.
Harmonic class_harmonic(const SynthConfig& cfg, int class_id, int joint, int coord) {
  Rng rng(mix_seed(cfg.seed, kTemplateSalt + 1315423911ull * static_cast<std::uint64_t>(class_id) +
                                 7ull * static_cast<std::uint64_t>(joint) +
                                 static_cast<std::uint64_t>(coord)));
  Harmonic h;
  h.offset = rng.uniform_real(-1.0, 1.0);
  h.amp1 = rng.uniform_real(0.4, 1.0);
  h.freq1 = static_cast<double>(rng.uniform_int(1, 2));
  h.phase1 = rng.uniform_real(0.0, kTwoPi);
  h.amp2 = rng.uniform_real(0.2, 0.6);
  h.freq2 = static_cast<double>(rng.uniform_int(2, 3));
  h.phase2 = rng.uniform_real(0.0, kTwoPi);
  return h;
}

// Resolves an ambiguity pair: returns the partner class whose template a
// class borrows on its middle half, or -1.
int shared_template_source(const SynthConfig& cfg, int class_id) {
  for (const auto& [a, b] : cfg.ambiguity_pairs)
    if (class_id == b) return a;
  return -1;
}

double base_coord(const SynthConfig& cfg, int class_id, int joint, int coord, double tau) {
  return class_harmonic(cfg, class_id, joint, coord).eval(tau);
}

}  // namespace

void SynthConfig::validate() const {
  if (n_classes < 1) throw InputError("synth: n_classes must be >= 1");
  if (n_joints < 1) throw InputError("synth: n_joints must be >= 1");
  if (segments_per_stream < 1) throw InputError("synth: segments_per_stream must be >= 1");
  if (min_segment_frames < 1 || max_segment_frames < min_segment_frames)
    throw InputError("synth: invalid frames_per_segment range");
  if (noise_scale < 0) throw InputError("synth: noise_scale must be >= 0");
  if (context_dim < 1) throw InputError("synth: context_dim must be >= 1");
  if (context_snr < 0) throw InputError("synth: context_snr must be >= 0");
  if (!(fps > 0)) throw InputError("synth: fps must be positive");
  for (const auto& [a, b] : ambiguity_pairs) {
    if (a < 1 || a > n_classes || b < 1 || b > n_classes || a == b)
      throw InputError("synth: ambiguity pair outside action class range");
    int uses = 0;
    for (const auto& [c, d] : ambiguity_pairs) uses += (c == a) + (d == a) + (c == b) + (d == b);
    if (uses > 2) throw InputError("synth: a class may appear in at most one ambiguity pair");
  }
}

std::array<double, 3> template_position(const SynthConfig& cfg, int class_id, int joint,
                                        double tau) {
  std::array<double, 3> p{};
  int source = shared_template_source(cfg, class_id);
  for (int k = 0; k < 3; ++k) {
    if (source >= 0) {
      if (tau >= 0.25 && tau <= 0.75) {
        p[k] = base_coord(cfg, source, joint, k, tau);
      } else {
        // Outside the shared middle, continue the class's own shape but
        // anchored so the trajectory stays continuous at the boundary.
        double boundary = tau < 0.25 ? 0.25 : 0.75;
        p[k] = base_coord(cfg, class_id, joint, k, tau) -
               base_coord(cfg, class_id, joint, k, boundary) +
               base_coord(cfg, source, joint, k, boundary);
      }
    } else {
      p[k] = base_coord(cfg, class_id, joint, k, tau);
    }
  }
  return p;
}

std::vector<double> context_mean(const SynthConfig& cfg, int class_id) {
  Rng rng(mix_seed(cfg.seed, kContextSalt + static_cast<std::uint64_t>(class_id)));
  std::vector<double> mean(cfg.context_dim);
  double norm2 = 0.0;
  for (auto& v : mean) {
    v = rng.normal();
    norm2 += v * v;
  }
  double norm = std::sqrt(norm2);
  if (norm == 0.0) {  // vanishing draw; fall back to a basis direction
    mean.assign(cfg.context_dim, 0.0);
    mean[0] = 1.0;
    return mean;
  }
  for (auto& v : mean) v /= norm;
  return mean;
}

SynthResult generate_synthetic(const SynthConfig& cfg, int stream_index) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, kStreamSalt + static_cast<std::uint64_t>(stream_index)));

  // Balanced class order: shuffled repeats of 1..n_classes.
  std::vector<int> class_cycle;
  while (static_cast<int>(class_cycle.size()) < cfg.segments_per_stream) {
    std::vector<int> block(cfg.n_classes);
    std::iota(block.begin(), block.end(), 1);
    for (int i = cfg.n_classes - 1; i > 0; --i)
      std::swap(block[i], block[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    class_cycle.insert(class_cycle.end(), block.begin(), block.end());
  }
  class_cycle.resize(cfg.segments_per_stream);

  // Layout: background, action, background, ..., action, background.
  std::vector<Segment> segments;
  int cursor = 0;
  auto draw_len = [&] { return rng.uniform_int(cfg.min_segment_frames, cfg.max_segment_frames); };
  for (int s = 0; s < cfg.segments_per_stream; ++s) {
    int bg_len = draw_len();
    segments.push_back({cursor, cursor + bg_len - 1, 0});
    cursor += bg_len;
    int act_len = draw_len();
    segments.push_back({cursor, cursor + act_len - 1, class_cycle[s]});
    cursor += act_len;
  }
  int tail = draw_len();
  segments.push_back({cursor, cursor + tail - 1, 0});
  cursor += tail;
  const int total_frames = cursor;

  SynthResult out;
  out.truth.segments = segments;
  out.stream.frame_rate = cfg.fps;
  out.stream.stream_id = "synthetic";
  out.stream.frames.reserve(total_frames);
  out.contexts.dim = static_cast<std::size_t>(cfg.context_dim);
  out.contexts.data.reserve(static_cast<std::size_t>(total_frames) * cfg.context_dim);

  std::vector<std::vector<double>> means(cfg.n_classes + 1);
  for (int c = 0; c <= cfg.n_classes; ++c) means[c] = context_mean(cfg, c);

  for (const auto& seg : segments) {
    const int len = seg.length();
    for (int t = seg.start; t <= seg.end; ++t) {
      double tau = len > 1 ? static_cast<double>(t - seg.start) / (len - 1) : 0.0;
      JointFrame frame;
      frame.t = t;
      frame.joints.resize(cfg.n_joints);
      for (int j = 0; j < cfg.n_joints; ++j) {
        auto p = template_position(cfg, seg.class_id, j, tau);
        for (int k = 0; k < 3; ++k) frame.joints[j][k] = p[k] + cfg.noise_scale * rng.normal();
      }
      out.stream.frames.push_back(std::move(frame));
      const auto& mean = means[seg.class_id];
      for (int d = 0; d < cfg.context_dim; ++d)
        out.contexts.data.push_back(cfg.context_snr * mean[d] + rng.normal());
    }
  }
  return out;
}

}  // namespace oadf
