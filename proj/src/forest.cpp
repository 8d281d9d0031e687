#include "oadf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "oadf/error.hpp"
#include "oadf/spectral.hpp"

namespace oadf {

namespace {

constexpr std::uint64_t kTreeSalt = 0x54EE5;
constexpr std::uint16_t kModelVersion = 1;
constexpr char kMagic[4] = {'O', 'A', 'D', 'F'};

enum class ObjectiveKind { Unary, PairwiseS, PairwiseT, HigherS, HigherT };

ObjectiveKind sample_objective(const ObjectiveWeights& w, Rng& rng) {
  const double cum[5] = {w.unary, w.unary + w.pairwise_spatial,
                         w.unary + w.pairwise_spatial + w.pairwise_temporal,
                         w.unary + w.pairwise_spatial + w.pairwise_temporal + w.higher_spatial,
                         w.unary + w.pairwise_spatial + w.pairwise_temporal + w.higher_spatial +
                             w.higher_temporal};
  const double u = rng.uniform() * cum[4];  // one draw per node, always
  for (int i = 0; i < 5; ++i)
    if (u < cum[i]) return static_cast<ObjectiveKind>(i);
  for (int i = 4; i >= 0; --i) {
    double prev = i == 0 ? 0.0 : cum[i - 1];
    if (cum[i] > prev) return static_cast<ObjectiveKind>(i);
  }
  return ObjectiveKind::Unary;
}

// -sum_y n(y) log(n(y) / W) over one child; classes iterated in id order so
// the result is bit-reproducible against an identically ordered reference.
double entropy_impurity(std::span<const double> class_weights) {
  double total = 0.0;
  for (double w : class_weights) total += w;
  if (total <= 0.0) return 0.0;
  double impurity = 0.0;
  for (double w : class_weights)
    if (w > 0.0) impurity -= w * std::log(w / total);
  return impurity;
}

struct ScoredSplit {
  double reference = 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;
};

ScoredSplit score_unary(const TrainingSet& set, std::span<const std::uint32_t> rows,
                        const std::vector<SplitCandidate>& candidates) {
  const int k = set.n_classes();
  std::vector<double> all(k, 0.0);
  for (auto r : rows) all[set.label(r)] += set.weight(r);

  ScoredSplit out;
  out.reference = entropy_impurity(all);

  std::vector<double> left(k), right(k);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& cand = candidates[c];
    std::fill(left.begin(), left.end(), 0.0);
    std::fill(right.begin(), right.end(), 0.0);
    for (auto r : rows) {
      if (set.feature(r)[cand.gamma] <= cand.threshold)
        left[set.label(r)] += set.weight(r);
      else
        right[set.label(r)] += set.weight(r);
    }
    double score = entropy_impurity(left) + entropy_impurity(right);
    if (score < out.best) {
      out.best = score;
      out.best_index = c;
    }
  }
  return out;
}

// Context accessor over the chosen subspace.
struct ContextView {
  const TrainingSet& set;
  Subspace subspace;

  std::size_t dim() const { return subspace == Subspace::Spatial ? set.spatial_dim() : 1; }
  double at(std::uint32_t row, std::size_t d) const {
    return subspace == Subspace::Spatial ? set.spatial(row)[d] : set.temporal(row);
  }
};

double scatter_around(const ContextView& ctx, std::span<const std::uint32_t> rows,
                      std::span<const double> mean, bool squared) {
  const std::size_t d = ctx.dim();
  double total = 0.0;
  for (auto r : rows) {
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double diff = ctx.at(r, i) - mean[i];
      sq += diff * diff;
    }
    total += squared ? sq : std::sqrt(sq);
  }
  return total;
}

double group_deviation(const ContextView& ctx, std::span<const std::uint32_t> rows, bool squared,
                       std::vector<double>& mean_buf) {
  if (rows.empty()) return 0.0;
  const std::size_t d = ctx.dim();
  mean_buf.assign(d, 0.0);
  for (auto r : rows)
    for (std::size_t i = 0; i < d; ++i) mean_buf[i] += ctx.at(r, i);
  for (auto& v : mean_buf) v /= static_cast<double>(rows.size());
  return scatter_around(ctx, rows, mean_buf, squared);
}

ScoredSplit score_higher(const TrainingSet& set, std::span<const std::uint32_t> rows,
                         const std::vector<SplitCandidate>& candidates, Subspace subspace,
                         bool squared) {
  ContextView ctx{set, subspace};
  std::vector<double> mean_buf;
  ScoredSplit out;
  out.reference = group_deviation(ctx, rows, squared, mean_buf);

  std::vector<std::uint32_t> left, right;
  left.reserve(rows.size());
  right.reserve(rows.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& cand = candidates[c];
    left.clear();
    right.clear();
    for (auto r : rows)
      (set.feature(r)[cand.gamma] <= cand.threshold ? left : right).push_back(r);
    double score = group_deviation(ctx, left, squared, mean_buf) +
                   group_deviation(ctx, right, squared, mean_buf);
    if (score < out.best) {
      out.best = score;
      out.best_index = c;
    }
  }
  return out;
}

}  // namespace

void TrainingSet::add(const TrainSample& s) {
  if (s.feature.size() != feature_dim_) throw InputError("training sample feature dimension mismatch");
  if (s.spatial.size() != spatial_dim_) throw InputError("training sample context dimension mismatch");
  if (s.label < 0) throw InputError("negative class label");
  if (!(s.weight > 0)) throw InputError("sample weight must be positive");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(s.feature.begin(), s.feature.end(), finite) ||
      !std::all_of(s.spatial.begin(), s.spatial.end(), finite) || !finite(s.temporal))
    throw InputError("non-finite training sample");
  features_.insert(features_.end(), s.feature.begin(), s.feature.end());
  spatials_.insert(spatials_.end(), s.spatial.begin(), s.spatial.end());
  temporals_.push_back(s.temporal);
  labels_.push_back(s.label);
  weights_.push_back(s.weight);
  n_classes_ = std::max(n_classes_, s.label + 1);
}

TrainingSet build_training_set(const std::vector<const SkeletonStream*>& streams,
                               const std::vector<const ContextMatrix*>& contexts,
                               const std::vector<const GroundTruth*>& truths, int deriv_lag) {
  if (streams.empty()) throw InputError("no training streams");
  if (streams.size() != truths.size() || streams.size() != contexts.size())
    throw InputError("streams, contexts and ground truth lists must align");

  std::size_t spatial_dim = 0;
  for (auto* ctx : contexts)
    if (ctx != nullptr) spatial_dim = std::max(spatial_dim, ctx->dim);

  TrainingSet set(9 * static_cast<std::size_t>(streams[0]->n_joints()), spatial_dim);
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const auto& stream = *streams[i];
    const auto* truth = truths[i];
    if (truth == nullptr) throw InputError("training stream lacks ground truth: " + stream.stream_id);
    const auto* ctx = contexts[i];
    if (ctx != nullptr && ctx->dim != spatial_dim)
      throw InputError("inconsistent context dimension across streams");
    TrainSample s;
    s.spatial.assign(spatial_dim, 0.0);
    for (int t = 0; t < static_cast<int>(stream.size()); ++t) {
      s.feature = extract_frame_feature(stream, t, deriv_lag).values;
      const auto& seg = truth->segment_of(t);
      s.temporal = temporal_context(seg, t);
      s.label = seg.class_id;
      if (ctx != nullptr) {
        auto row = ctx->row(t);
        s.spatial.assign(row.begin(), row.end());
      }
      set.add(s);
    }
  }
  return set;
}

std::vector<std::uint32_t> rebalanced_bootstrap(const TrainingSet& set, Rng& rng) {
  const std::size_t n = set.size();
  if (n == 0) throw InputError("bootstrap over empty sample set");

  std::vector<std::size_t> class_count(set.n_classes(), 0);
  for (std::size_t i = 0; i < n; ++i) ++class_count[set.label(i)];

  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += 1.0 / static_cast<double>(class_count[set.label(i)]);
    cdf[i] = acc;
  }

  std::vector<std::uint32_t> draws(n);
  for (auto& d : draws) {
    double u = rng.uniform() * acc;
    d = static_cast<std::uint32_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (d >= n) d = static_cast<std::uint32_t>(n - 1);
  }
  return draws;
}

CandidateSet generate_candidates(const TrainingSet& set, std::span<const std::uint32_t> rows,
                                 int n_candidates, Rng& rng) {
  if (rows.size() < 2) throw InputError("candidate generation needs at least 2 samples");
  const std::size_t dim = set.feature_dim();

  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (auto r : rows) {
    auto f = set.feature(r);
    for (std::size_t d = 0; d < dim; ++d) {
      lo[d] = std::min(lo[d], f[d]);
      hi[d] = std::max(hi[d], f[d]);
    }
  }
  bool any_usable = false;
  for (std::size_t d = 0; d < dim; ++d) any_usable = any_usable || hi[d] > lo[d];

  CandidateSet out;
  if (!any_usable) {
    out.constant_features = true;
    return out;
  }

  long budget = 32L * n_candidates;
  while (static_cast<int>(out.candidates.size()) < n_candidates && budget-- > 0) {
    auto gamma = static_cast<std::uint32_t>(rng.below(dim));
    if (!(hi[gamma] > lo[gamma])) continue;
    double t = lo[gamma] + rng.uniform() * (hi[gamma] - lo[gamma]);
    if (!(t > lo[gamma] && t < hi[gamma])) continue;  // would send all samples one way
    out.candidates.push_back({gamma, t});
  }
  return out;
}

std::vector<SplitCandidate> exhaustive_candidates(const TrainingSet& set,
                                                  std::span<const std::uint32_t> rows) {
  std::vector<SplitCandidate> out;
  std::vector<double> values;
  for (std::uint32_t gamma = 0; gamma < set.feature_dim(); ++gamma) {
    values.clear();
    for (auto r : rows) values.push_back(set.feature(r)[gamma]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
      out.push_back({gamma, 0.5 * (values[i] + values[i + 1])});
  }
  return out;
}

double objective_unary(std::span<const double> left_class_weights,
                       std::span<const double> right_class_weights) {
  return entropy_impurity(left_class_weights) + entropy_impurity(right_class_weights);
}

double objective_higher(const std::vector<std::vector<double>>& left_contexts,
                        const std::vector<std::vector<double>>& right_contexts, bool squared) {
  auto side = [&](const std::vector<std::vector<double>>& group) {
    if (group.empty()) return 0.0;
    const std::size_t d = group[0].size();
    std::vector<double> mean(d, 0.0);
    for (const auto& z : group)
      for (std::size_t i = 0; i < d; ++i) mean[i] += z[i];
    for (auto& v : mean) v /= static_cast<double>(group.size());
    double total = 0.0;
    for (const auto& z : group) {
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double diff = z[i] - mean[i];
        sq += diff * diff;
      }
      total += squared ? sq : std::sqrt(sq);
    }
    return total;
  };
  return side(left_contexts) + side(right_contexts);
}

PairwiseResult objective_pairwise(const TrainingSet& set, std::span<const std::uint32_t> rows,
                                  const std::vector<SplitCandidate>& candidates, Subspace subspace,
                                  int m_max, Rng& rng) {
  PairwiseResult res;

  std::vector<std::uint32_t> eval(rows.begin(), rows.end());
  if (static_cast<int>(eval.size()) > m_max) {
    for (int i = 0; i < m_max; ++i) {
      std::size_t j = i + rng.below(eval.size() - i);
      std::swap(eval[i], eval[j]);
    }
    eval.resize(m_max);
  }
  const std::size_t m = eval.size();
  if (m < 3 || candidates.empty()) {
    res.degenerate = true;
    return res;
  }

  ContextView ctx{set, subspace};
  const std::size_t d = ctx.dim();
  spectral::Matrix z(m, std::max<std::size_t>(d, 1));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) z(i, j) = ctx.at(eval[i], j);
  if (d == 0) z.setZero();

  auto dist = spectral::pairwise_distances(z);
  double sigma = spectral::mean_sigma_from_distances(dist);
  if (!(sigma > 0)) {
    res.degenerate = true;
    return res;
  }
  auto laplacian = spectral::normalized_laplacian(spectral::affinity_from_distances(dist, sigma));
  auto embedding = spectral::fiedler_embedding(laplacian);
  if (!embedding) {
    res.degenerate = true;
    return res;
  }
  const auto& e = embedding->values;

  // Within-child scatter via sum-of-squares identity; the reference split is
  // a single child holding every sample.
  double total_sum = e.sum();
  double total_sq = e.squaredNorm();
  res.reference_score = total_sq - total_sum * total_sum / static_cast<double>(m);

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& cand = candidates[c];
    double sum_left = 0.0;
    std::size_t n_left = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (set.feature(eval[i])[cand.gamma] <= cand.threshold) {
        sum_left += e[i];
        ++n_left;
      }
    }
    double score = total_sq;
    if (n_left > 0) score -= sum_left * sum_left / static_cast<double>(n_left);
    if (n_left < m) {
      double sum_right = total_sum - sum_left;
      score -= sum_right * sum_right / static_cast<double>(m - n_left);
    }
    if (score < best) {
      best = score;
      best_index = c;
    }
  }
  res.best_score = best;
  res.best_index = best_index;
  return res;
}

LeafStats leaf_statistics(const TrainingSet& set, std::span<const std::uint32_t> rows,
                          int n_classes) {
  if (rows.empty()) throw InputError("leaf statistics over empty node");
  LeafStats stats;
  stats.class_dist.assign(n_classes, 0.0);
  double weight_total = 0.0;
  double loc_sum = 0.0;
  for (auto r : rows) {
    double w = set.weight(r);
    stats.class_dist[set.label(r)] += w;
    loc_sum += w * set.temporal(r);
    weight_total += w;
  }
  for (auto& v : stats.class_dist) v /= weight_total;
  stats.mean_loc = loc_sum / weight_total;
  stats.n_samples = rows.size();
  return stats;
}

namespace {

class TreeGrower {
 public:
  TreeGrower(const TrainingSet& set, const ForestParams& params) : set_(set), params_(params) {}

  Tree grow(std::vector<std::uint32_t> rows, Rng root_rng) {
    build(std::move(rows), 0, std::move(root_rng));
    return std::move(tree_);
  }

 private:
  std::int32_t make_leaf(std::span<const std::uint32_t> rows) {
    auto idx = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[idx].leaf = static_cast<std::int32_t>(tree_.leaves.size());
    tree_.leaves.push_back(leaf_statistics(set_, rows, set_.n_classes()));
    return idx;
  }

  std::int32_t build(std::vector<std::uint32_t> rows, int depth, Rng rng) {
    if (depth >= params_.max_depth || rows.size() <= static_cast<std::size_t>(params_.min_samples))
      return make_leaf(rows);

    std::vector<SplitCandidate> candidates;
    if (params_.exhaustive_candidates) {
      candidates = exhaustive_candidates(set_, rows);
    } else {
      candidates = generate_candidates(set_, rows, params_.n_candidates, rng).candidates;
    }
    // Canonical evaluation order: selection depends only on candidate values,
    // never on generation order.
    std::sort(candidates.begin(), candidates.end());
    if (candidates.empty()) return make_leaf(rows);

    const ObjectiveKind kind = sample_objective(params_.objectives, rng);
    ScoredSplit scored;
    switch (kind) {
      case ObjectiveKind::Unary:
        scored = score_unary(set_, rows, candidates);
        break;
      case ObjectiveKind::HigherS:
        scored = score_higher(set_, rows, candidates, Subspace::Spatial, params_.squared_higher);
        break;
      case ObjectiveKind::HigherT:
        scored = score_higher(set_, rows, candidates, Subspace::Temporal, params_.squared_higher);
        break;
      case ObjectiveKind::PairwiseS:
      case ObjectiveKind::PairwiseT: {
        auto sub = kind == ObjectiveKind::PairwiseS ? Subspace::Spatial : Subspace::Temporal;
        auto pw = objective_pairwise(set_, rows, candidates, sub, params_.m_max, rng);
        if (pw.degenerate) {
          scored = score_unary(set_, rows, candidates);  // degeneracy fallback
        } else {
          scored.reference = pw.reference_score;
          scored.best = pw.best_score;
          scored.best_index = pw.best_index;
        }
        break;
      }
    }

    const double gain = scored.reference - scored.best;
    if (!(gain > params_.gain_epsilon)) return make_leaf(rows);

    const auto& cand = candidates[scored.best_index];
    std::vector<std::uint32_t> left, right;
    for (auto r : rows)
      (set_.feature(r)[cand.gamma] <= cand.threshold ? left : right).push_back(r);
    if (left.empty() || right.empty()) return make_leaf(rows);
    rows.clear();
    rows.shrink_to_fit();

    const std::uint64_t seed_left = rng.next();
    const std::uint64_t seed_right = rng.next();
    auto idx = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[idx].gamma = cand.gamma;
    tree_.nodes[idx].threshold = cand.threshold;
    const auto left_idx = build(std::move(left), depth + 1, Rng(seed_left));
    tree_.nodes[idx].left = left_idx;
    const auto right_idx = build(std::move(right), depth + 1, Rng(seed_right));
    tree_.nodes[idx].right = right_idx;
    return idx;
  }

  const TrainingSet& set_;
  const ForestParams& params_;
  Tree tree_;
};

}  // namespace

Tree grow_tree(const TrainingSet& set, std::vector<std::uint32_t> rows, const ForestParams& params,
               Rng& rng) {
  if (rows.empty()) throw InputError("cannot grow a tree from zero samples");
  return TreeGrower(set, params).grow(std::move(rows), Rng(rng.next()));
}

Forest train_forest(const TrainingSet& set, const ForestParams& params, int n_joints) {
  if (set.size() == 0) throw InputError("empty training set");
  if (set.n_classes() < 2 && !params.allow_single_class)
    throw InputError("training set has a single class (set allow_single_class to permit)");
  if (params.n_trees < 1) throw InputError("n_trees must be >= 1");
  const auto& w = params.objectives;
  const double weights[5] = {w.unary, w.pairwise_spatial, w.pairwise_temporal, w.higher_spatial,
                             w.higher_temporal};
  double weight_sum = 0.0;
  for (double v : weights) {
    if (v < 0) throw InputError("objective weights must be non-negative");
    weight_sum += v;
  }
  if (!(weight_sum > 0)) throw InputError("objective weights must not all be zero");
  if ((w.pairwise_spatial > 0 || w.higher_spatial > 0) && set.spatial_dim() == 0)
    throw InputError("spatial objectives require spatial contexts");
  if (set.feature_dim() != 9 * static_cast<std::size_t>(n_joints))
    throw InputError("feature dimension does not match 9 * n_joints");

  Forest forest;
  forest.params = params;
  forest.n_joints = static_cast<std::uint32_t>(n_joints);
  forest.feature_dim = static_cast<std::uint32_t>(set.feature_dim());
  forest.n_classes = static_cast<std::uint32_t>(set.n_classes());
  forest.trees.reserve(params.n_trees);
  for (int i = 0; i < params.n_trees; ++i) {
    Rng tree_rng(mix_seed(params.seed, kTreeSalt + static_cast<std::uint64_t>(i)));
    auto rows = rebalanced_bootstrap(set, tree_rng);
    forest.trees.push_back(grow_tree(set, std::move(rows), params, tree_rng));
  }
  return forest;
}

const LeafStats& Tree::traverse(std::span<const double> x, std::size_t* comparisons) const {
  const TreeNode* node = &nodes[0];
  std::size_t count = 0;
  while (!node->is_leaf()) {
    ++count;
    node = x[node->gamma] <= node->threshold ? &nodes[node->left] : &nodes[node->right];
  }
  if (comparisons != nullptr) *comparisons += count;
  return leaves[node->leaf];
}

// --- binary model format ---

namespace {

std::uint64_t crc64_table_entry(std::uint64_t byte) {
  constexpr std::uint64_t poly = 0x42F0E1EBA9EA3693ull;  // ECMA-182
  std::uint64_t crc = byte << 56;
  for (int bit = 0; bit < 8; ++bit) crc = (crc & 0x8000000000000000ull) ? (crc << 1) ^ poly : crc << 1;
  return crc;
}

std::uint64_t crc64(std::span<const std::uint8_t> data) {
  static const auto table = [] {
    std::array<std::uint64_t, 256> t{};
    for (std::uint64_t i = 0; i < 256; ++i) t[i] = crc64_table_entry(i);
    return t;
  }();
  std::uint64_t crc = 0;
  for (std::uint8_t b : data) crc = (crc << 8) ^ table[((crc >> 56) ^ b) & 0xFF];
  return crc;
}

struct ByteWriter {
  std::vector<std::uint8_t> buf;

  void u8(std::uint8_t v) { buf.push_back(v); }
  void pad(std::size_t n) { buf.insert(buf.end(), n, 0); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void align8() { pad((8 - buf.size() % 8) % 8); }
};

struct ByteReader {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;

  void require(std::size_t n) const {
    if (pos + n > data.size()) throw FormatError("model file truncated");
  }
  std::uint8_t u8() {
    require(1);
    return data[pos++];
  }
  void skip(std::size_t n) {
    require(n);
    pos += n;
  }
  std::uint16_t u16() {
    require(2);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(data[pos + i]) << (8 * i);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void align8() { skip((8 - pos % 8) % 8); }
};

void write_node(ByteWriter& w, const Tree& tree, std::int32_t index) {
  const auto& node = tree.nodes[index];
  if (node.is_leaf()) {
    w.u8(1);
    w.pad(7);
    const auto& leaf = tree.leaves[node.leaf];
    for (double v : leaf.class_dist) w.f64(v);
    w.f64(leaf.mean_loc);
    w.u64(leaf.n_samples);
  } else {
    w.u8(0);
    w.pad(3);
    w.u32(node.gamma);
    w.f64(node.threshold);
    write_node(w, tree, node.left);
    write_node(w, tree, node.right);
  }
}

std::int32_t read_node(ByteReader& r, Tree& tree, std::uint32_t n_classes,
                       std::uint32_t feature_dim, int depth) {
  if (depth > 512) throw FormatError("model tree too deep");
  const std::uint8_t tag = r.u8();
  if (tag == 1) {
    r.skip(7);
    LeafStats leaf;
    leaf.class_dist.resize(n_classes);
    for (auto& v : leaf.class_dist) v = r.f64();
    leaf.mean_loc = r.f64();
    leaf.n_samples = r.u64();
    double sum = 0.0;
    for (double v : leaf.class_dist) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw FormatError("invalid leaf distribution");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw FormatError("leaf distribution does not sum to 1");
    if (!(leaf.mean_loc >= 0.0 && leaf.mean_loc <= 1.0)) throw FormatError("leaf mean_loc outside [0,1]");
    auto idx = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[idx].leaf = static_cast<std::int32_t>(tree.leaves.size());
    tree.leaves.push_back(std::move(leaf));
    return idx;
  }
  if (tag != 0) throw FormatError("unknown node tag");
  r.skip(3);
  auto idx = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.push_back({});
  const std::uint32_t gamma = r.u32();
  if (gamma >= feature_dim) throw FormatError("split feature index out of range");
  tree.nodes[idx].gamma = gamma;
  tree.nodes[idx].threshold = r.f64();
  if (!std::isfinite(tree.nodes[idx].threshold)) throw FormatError("non-finite split threshold");
  tree.nodes[idx].left = read_node(r, tree, n_classes, feature_dim, depth + 1);
  tree.nodes[idx].right = read_node(r, tree, n_classes, feature_dim, depth + 1);
  return idx;
}

}  // namespace

std::vector<std::uint8_t> serialize_forest(const Forest& forest) {
  if (forest.trees.empty()) throw InputError("cannot serialize a forest with no trees");
  for (const auto& tree : forest.trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf() && node.gamma >= forest.feature_dim)
        throw InputError("split references a non-skeleton feature index");

  ByteWriter w;
  w.buf.reserve(1 << 16);
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kModelVersion);
  w.pad(2);

  const auto& p = forest.params;
  w.i32(p.n_trees);
  w.i32(p.max_depth);
  w.i32(p.min_samples);
  w.i32(p.n_candidates);
  w.f64(p.objectives.unary);
  w.f64(p.objectives.pairwise_spatial);
  w.f64(p.objectives.pairwise_temporal);
  w.f64(p.objectives.higher_spatial);
  w.f64(p.objectives.higher_temporal);
  w.i32(p.m_max);
  w.i32(p.deriv_lag);
  w.u64(p.seed);
  w.u8(static_cast<std::uint8_t>((p.squared_higher ? 1 : 0) | (p.exhaustive_candidates ? 2 : 0) |
                                 (p.allow_single_class ? 4 : 0)));
  w.pad(7);
  w.f64(p.gain_epsilon);

  w.u32(forest.n_joints);
  w.u32(forest.feature_dim);
  w.u32(forest.n_classes);
  for (std::uint32_t c = 0; c < forest.n_classes; ++c) w.u32(c);
  w.align8();
  w.f64(forest.beta);

  w.u32(static_cast<std::uint32_t>(forest.trees.size()));
  w.pad(4);
  for (const auto& tree : forest.trees) {
    w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
    w.pad(4);
    write_node(w, tree, 0);
  }

  w.u64(crc64(w.buf));
  return std::move(w.buf);
}

Forest deserialize_forest(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw FormatError("model file truncated");
  const std::uint64_t stored = [&] {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + i]) << (8 * i);
    return v;
  }();
  if (crc64(bytes.first(bytes.size() - 8)) != stored) throw FormatError("model checksum mismatch");

  ByteReader r{bytes.first(bytes.size() - 8)};
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a model file (bad magic)");
  const std::uint16_t version = r.u16();
  if (version != kModelVersion)
    throw FormatError("unsupported model version " + std::to_string(version));
  r.skip(2);

  Forest forest;
  auto& p = forest.params;
  p.n_trees = r.i32();
  p.max_depth = r.i32();
  p.min_samples = r.i32();
  p.n_candidates = r.i32();
  p.objectives.unary = r.f64();
  p.objectives.pairwise_spatial = r.f64();
  p.objectives.pairwise_temporal = r.f64();
  p.objectives.higher_spatial = r.f64();
  p.objectives.higher_temporal = r.f64();
  p.m_max = r.i32();
  p.deriv_lag = r.i32();
  p.seed = r.u64();
  const std::uint8_t flags = r.u8();
  p.squared_higher = flags & 1;
  p.exhaustive_candidates = flags & 2;
  p.allow_single_class = flags & 4;
  r.skip(7);
  p.gain_epsilon = r.f64();

  forest.n_joints = r.u32();
  forest.feature_dim = r.u32();
  if (forest.feature_dim != 9 * forest.n_joints)
    throw FormatError("feature dimension does not match 9 * n_joints");
  forest.n_classes = r.u32();
  if (forest.n_classes == 0) throw FormatError("model has no classes");
  for (std::uint32_t c = 0; c < forest.n_classes; ++c)
    if (r.u32() != c) throw FormatError("non-contiguous class id set");
  r.align8();
  forest.beta = r.f64();
  if (!(forest.beta >= 0.0 && forest.beta <= 0.5)) throw FormatError("beta outside [0, 0.5]");

  const std::uint32_t n_trees = r.u32();
  if (n_trees == 0) throw FormatError("model has no trees");
  r.skip(4);
  forest.trees.resize(n_trees);
  for (auto& tree : forest.trees) {
    const std::uint32_t n_nodes = r.u32();
    if (n_nodes == 0) throw FormatError("tree has no nodes");
    r.skip(4);
    tree.nodes.reserve(n_nodes);
    read_node(r, tree, forest.n_classes, forest.feature_dim, 0);
    if (tree.nodes.size() != n_nodes) throw FormatError("tree node count mismatch");
  }
  if (r.pos != r.data.size()) throw FormatError("trailing bytes after model payload");
  return forest;
}

void save_forest(const Forest& forest, const std::filesystem::path& path) {
  auto bytes = serialize_forest(forest);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_forest(bytes);
}

}  // namespace oadf
