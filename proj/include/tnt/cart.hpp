#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "tnt/dataset.hpp"

namespace tnt {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;                      // majority class at this node
  std::vector<double> class_weights;  // per-class visiting weight totals

  bool is_leaf() const { return feature < 0; }
};

/// Binary classification tree over an index arena. Fitted trees keep the
/// per-node class-weight histograms so cost-complexity pruning can be applied
/// afterwards without re-touching the data.
struct Tree {
  std::vector<TreeNode> nodes;
  int root = -1;
  int n_features = 0;
  int n_classes = 0;

  bool empty() const { return root < 0; }
  int split_count() const;
  int leaf_count() const;
};

// 1 - sum_k p_k^2 over the histogram; throws DataError on all-zero input.
double gini(std::span<const double> class_weights);

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;  // weighted Gini impurity decrease within the node
};

// Exhaustive scan over (feature, midpoint-between-consecutive-distinct-value)
// candidates, maximizing the weighted impurity decrease. Ties go to the lower
// feature index, then the lower threshold. nullopt when no candidate has
// positive gain. `weights` is indexed by dataset row (empty = uniform).
std::optional<SplitCandidate> best_split(const Dataset& ds,
                                         std::span<const int> rows,
                                         std::span<const double> weights);

struct DepthFirst {
  int min_leaf_size = 1;
};
struct BestFirst {
  int max_splits = 0;
};
using GrowMode = std::variant<DepthFirst, BestFirst>;

// Deterministic CART induction; Gini split criterion, leaves labeled by the
// weighted majority class (ties to the lowest class index).
Tree fit_cart(const Dataset& ds, std::span<const double> weights,
              const GrowMode& mode);

// Same engine on a row subset with replacement labels (micro-tree fitting):
// `row_labels` runs parallel to `rows`, in [0, n_classes).
Tree fit_cart_on(const Dataset& ds, std::span<const int> rows,
                 std::span<const int> row_labels,
                 std::span<const double> weights, int n_classes,
                 const GrowMode& mode);

/// Weakest-link alpha schedule: each entry gives the smallest alpha at which
/// the tree shrinks to `split_count` splits. Alphas strictly increase, split
/// counts strictly decrease, and the last entry always has 0 splits.
struct PruneSchedule {
  struct Entry {
    double alpha = 0.0;
    int split_count = 0;
  };
  std::vector<Entry> entries;
};

PruneSchedule prune_schedule(const Tree& tree);

// Minimal cost-complexity pruning: returns the subtree minimizing
// R(t) + alpha * |t| with R the weighted-Gini leaf risk and |t| the number of
// internal nodes; ties resolved toward the smaller tree.
Tree ccp_prune(const Tree& tree, double alpha);

int tree_predict(const Tree& tree, std::span<const double> x);

}  // namespace tnt
