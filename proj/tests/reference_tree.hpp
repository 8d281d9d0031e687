#pragma once

// Independent brute-force decision-tree builder used as the oracle for
// unary-only, exhaustive-candidate training. Shares nothing with the library
// implementation beyond the public TrainingSet accessors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "oadf/forest.hpp"

namespace reftree {

struct Node {
  bool is_leaf = true;
  std::uint32_t gamma = 0;
  double threshold = 0.0;
  std::vector<double> dist;
  double mean_loc = 0.0;
  std::uint64_t n = 0;
  std::unique_ptr<Node> left, right;
};

inline double entropy_cost(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double cost = 0.0;
  for (double c : counts)
    if (c > 0.0) cost -= c * std::log(c / total);
  return cost;
}

inline std::unique_ptr<Node> build(const oadf::TrainingSet& set,
                                   const std::vector<std::uint32_t>& rows, int depth,
                                   int max_depth, int min_samples, double gain_epsilon) {
  auto node = std::make_unique<Node>();

  auto make_leaf = [&] {
    node->is_leaf = true;
    node->dist.assign(set.n_classes(), 0.0);
    double w_total = 0.0, loc = 0.0;
    for (auto r : rows) {
      node->dist[set.label(r)] += set.weight(r);
      loc += set.weight(r) * set.temporal(r);
      w_total += set.weight(r);
    }
    for (auto& v : node->dist) v /= w_total;
    node->mean_loc = loc / w_total;
    node->n = rows.size();
  };

  if (depth >= max_depth || rows.size() <= static_cast<std::size_t>(min_samples)) {
    make_leaf();
    return node;
  }

  std::vector<double> ref_counts(set.n_classes(), 0.0);
  for (auto r : rows) ref_counts[set.label(r)] += set.weight(r);
  const double ref_cost = entropy_cost(ref_counts);

  double best_cost = std::numeric_limits<double>::infinity();
  std::uint32_t best_gamma = 0;
  double best_threshold = 0.0;
  bool found = false;

  std::vector<double> values;
  std::vector<double> lcounts(set.n_classes()), rcounts(set.n_classes());
  for (std::uint32_t gamma = 0; gamma < set.feature_dim(); ++gamma) {
    values.clear();
    for (auto r : rows) values.push_back(set.feature(r)[gamma]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double t = 0.5 * (values[i] + values[i + 1]);
      std::fill(lcounts.begin(), lcounts.end(), 0.0);
      std::fill(rcounts.begin(), rcounts.end(), 0.0);
      for (auto r : rows)
        (set.feature(r)[gamma] <= t ? lcounts : rcounts)[set.label(r)] += set.weight(r);
      const double cost = entropy_cost(lcounts) + entropy_cost(rcounts);
      if (cost < best_cost) {
        best_cost = cost;
        best_gamma = gamma;
        best_threshold = t;
        found = true;
      }
    }
  }

  if (!found || !(ref_cost - best_cost > gain_epsilon)) {
    make_leaf();
    return node;
  }

  std::vector<std::uint32_t> lrows, rrows;
  for (auto r : rows)
    (set.feature(r)[best_gamma] <= best_threshold ? lrows : rrows).push_back(r);

  node->is_leaf = false;
  node->gamma = best_gamma;
  node->threshold = best_threshold;
  node->left = build(set, lrows, depth + 1, max_depth, min_samples, gain_epsilon);
  node->right = build(set, rrows, depth + 1, max_depth, min_samples, gain_epsilon);
  return node;
}

// Structural and statistical equality against the library tree.
inline bool equal(const oadf::Tree& tree, std::int32_t index, const Node& ref, double tol = 0.0) {
  const auto& node = tree.nodes[index];
  if (node.is_leaf() != ref.is_leaf) return false;
  if (node.is_leaf()) {
    const auto& leaf = tree.leaves[node.leaf];
    if (leaf.n_samples != ref.n) return false;
    if (std::abs(leaf.mean_loc - ref.mean_loc) > tol) return false;
    if (leaf.class_dist.size() != ref.dist.size()) return false;
    for (std::size_t i = 0; i < ref.dist.size(); ++i)
      if (std::abs(leaf.class_dist[i] - ref.dist[i]) > tol) return false;
    return true;
  }
  if (node.gamma != ref.gamma || node.threshold != ref.threshold) return false;
  return equal(tree, node.left, *ref.left, tol) && equal(tree, node.right, *ref.right, tol);
}

}  // namespace reftree
