#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oadf/features.hpp"
#include "oadf/rng.hpp"
#include "oadf/stream.hpp"

namespace oadf {

// Which context subspace an objective looks at.
enum class Subspace { Spatial, Temporal };

// Sampling weights over the five split objectives
// {unary, pairwise-S, pairwise-T, higher-S, higher-T}.
struct ObjectiveWeights {
  double unary = 1.0;
  double pairwise_spatial = 1.0;
  double pairwise_temporal = 1.0;
  double higher_spatial = 1.0;
  double higher_temporal = 1.0;

  static ObjectiveWeights rf() { return {1, 0, 0, 0, 0}; }
  static ObjectiveWeights rf_t() { return {1, 0, 1, 0, 1}; }
  static ObjectiveWeights rf_st() { return {1, 1, 1, 1, 1}; }
};

struct ForestParams {
  int n_trees = 50;
  int max_depth = 100;
  int min_samples = 1;    // leaf when a node holds <= this many samples
  int n_candidates = 64;
  ObjectiveWeights objectives{};
  int m_max = 256;        // subsample cap for the pairwise embedding
  int deriv_lag = 1;
  std::uint64_t seed = 0;
  bool squared_higher = false;      // sum of squared deviations instead of L2 norms
  bool exhaustive_candidates = false;  // all (feature, midpoint) candidates
  bool allow_single_class = false;
  double gain_epsilon = 1e-12;
};

// One labeled training frame: skeleton feature, context pair, class, weight.
struct TrainSample {
  std::vector<double> feature;
  std::vector<double> spatial;
  double temporal = 0.0;
  int label = 0;
  double weight = 1.0;
};

// Column-flat sample store. Labels are 0..n_classes-1 with 0 = background.
class TrainingSet {
 public:
  TrainingSet(std::size_t feature_dim, std::size_t spatial_dim)
      : feature_dim_(feature_dim), spatial_dim_(spatial_dim) {}

  void add(const TrainSample& s);
  std::size_t size() const { return labels_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t spatial_dim() const { return spatial_dim_; }
  int n_classes() const { return n_classes_; }

  std::span<const double> feature(std::size_t i) const {
    return {features_.data() + i * feature_dim_, feature_dim_};
  }
  std::span<const double> spatial(std::size_t i) const {
    return {spatials_.data() + i * spatial_dim_, spatial_dim_};
  }
  double temporal(std::size_t i) const { return temporals_[i]; }
  int label(std::size_t i) const { return labels_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

 private:
  std::size_t feature_dim_;
  std::size_t spatial_dim_;
  int n_classes_ = 0;
  std::vector<double> features_;
  std::vector<double> spatials_;
  std::vector<double> temporals_;
  std::vector<int> labels_;
  std::vector<double> weights_;
};

// Assembles per-frame training samples from aligned streams, contexts and
// ground truth. Contexts may be null when no spatial objectives are used.
TrainingSet build_training_set(
    const std::vector<const SkeletonStream*>& streams,
    const std::vector<const ContextMatrix*>& contexts,
    const std::vector<const GroundTruth*>& truths, int deriv_lag);

// Axis-aligned threshold test on a skeleton feature: x[gamma] <= t goes left.
struct SplitCandidate {
  std::uint32_t gamma = 0;
  double threshold = 0.0;

  friend bool operator<(const SplitCandidate& a, const SplitCandidate& b) {
    return a.gamma != b.gamma ? a.gamma < b.gamma : a.threshold < b.threshold;
  }
};

struct LeafStats {
  std::vector<double> class_dist;  // normalized weighted class counts
  double mean_loc = 0.0;           // mean temporal context of the samples
  std::uint64_t n_samples = 0;
};

struct TreeNode {
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t gamma = 0;
  double threshold = 0.0;
  std::int32_t leaf = -1;

  bool is_leaf() const { return leaf >= 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<LeafStats> leaves;

  // Follows x[gamma] <= t left / > t right from the root; optionally counts
  // the comparisons executed.
  const LeafStats& traverse(std::span<const double> x, std::size_t* comparisons = nullptr) const;
};

struct Forest {
  ForestParams params;
  std::uint32_t n_joints = 0;
  std::uint32_t feature_dim = 0;
  std::uint32_t n_classes = 0;
  double beta = 0.5;  // localization gate threshold, set by calibration
  std::vector<Tree> trees;
};

// --- training primitives (exposed for direct verification) ---

// Draws |set| indices with replacement, each sample weighted by the inverse
// of its class frequency, so every class receives equal expected mass.
std::vector<std::uint32_t> rebalanced_bootstrap(const TrainingSet& set, Rng& rng);

struct CandidateSet {
  std::vector<SplitCandidate> candidates;
  bool constant_features = false;  // every feature constant across the node
};

// Random (feature, threshold) candidates over the node rows. Thresholds are
// uniform strictly inside the observed (min, max) of the chosen feature, so
// no candidate sends all samples one way; degenerate draws are retried up to
// a bounded budget.
CandidateSet generate_candidates(const TrainingSet& set, std::span<const std::uint32_t> rows,
                                 int n_candidates, Rng& rng);

// All (feature, midpoint-between-consecutive-distinct-values) candidates.
std::vector<SplitCandidate> exhaustive_candidates(const TrainingSet& set,
                                                  std::span<const std::uint32_t> rows);

// Sum over children of the weighted class entropy impurity
// -sum_y n(y) * log(n(y) / W); empty children contribute 0. Lower is better.
double objective_unary(std::span<const double> left_class_weights,
                       std::span<const double> right_class_weights);

// Sum over children and samples of the context deviation from the child mean
// (L2 norm per sample, or squared when `squared`). Lower is better.
double objective_higher(const std::vector<std::vector<double>>& left_contexts,
                        const std::vector<std::vector<double>>& right_contexts,
                        bool squared = false);

struct PairwiseResult {
  bool degenerate = false;  // sigma = 0 or eigengap collapse: caller falls back
  std::size_t best_index = 0;
  double best_score = 0.0;
  double reference_score = 0.0;
};

// Normalized-cut surrogate: embeds the node's contexts (subsampled to m_max)
// with the Fiedler vector of the affinity Laplacian and scores each candidate
// by the within-child scatter of the embedding. Scores the all-left reference
// split with the same formula.
PairwiseResult objective_pairwise(const TrainingSet& set, std::span<const std::uint32_t> rows,
                                  const std::vector<SplitCandidate>& candidates,
                                  Subspace subspace, int m_max, Rng& rng);

LeafStats leaf_statistics(const TrainingSet& set, std::span<const std::uint32_t> rows,
                          int n_classes);

// Grows one tree from the given sample multiset (duplicates carry bootstrap
// multiplicity); consumes the rng in a canonical order so results are
// reproducible.
Tree grow_tree(const TrainingSet& set, std::vector<std::uint32_t> rows, const ForestParams& params,
               Rng& rng);

// Trains params.n_trees trees, each from an independent rebalanced bootstrap
// with a per-tree derived seed. Deterministic for a fixed params.seed.
Forest train_forest(const TrainingSet& set, const ForestParams& params, int n_joints);

// --- model file (binary, little-endian, CRC-64 trailer) ---

std::vector<std::uint8_t> serialize_forest(const Forest& forest);
Forest deserialize_forest(std::span<const std::uint8_t> bytes);
void save_forest(const Forest& forest, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

}  // namespace oadf
