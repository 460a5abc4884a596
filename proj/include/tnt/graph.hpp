#pragma once

#include <string>
#include <vector>

#include "tnt/cart.hpp"
#include "tnt/dataset.hpp"

namespace tnt {

struct GraphNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;  // class index, meaningful for leaves

  bool is_leaf() const { return feature < 0; }
};

/// Rooted directed acyclic decision graph over a node arena. Children may be
/// shared by multiple parents. Structural edits return new graphs; fitted
/// graphs are immutable and safe to share across threads.
struct DecisionGraph {
  std::vector<GraphNode> nodes;
  int root = 0;
  int n_features = 0;
  int n_classes = 0;
};

DecisionGraph single_leaf_graph(int label, int n_features, int n_classes);

// Throws ModelError on cycles, dangling refs, unreachable nodes, or a
// violation of leaf_count <= internal_count + 1.
void validate(const DecisionGraph& g);

struct InferResult {
  int label = 0;
  std::vector<int> path;  // root..leaf node ids
};

// Routing convention everywhere in this repository:
// x[feature] < threshold -> left, otherwise right.
InferResult infer(const DecisionGraph& g, std::span<const double> x);
int predict(const DecisionGraph& g, std::span<const double> x);
std::vector<int> predict_all(const DecisionGraph& g, const Dataset& ds);

// Forward inference for the given rows starting at `start` instead of root.
std::vector<int> infer_from(const DecisionGraph& g, int start,
                            const Dataset& ds, std::span<const int> rows);

/// Per-node lists of the training rows that visit it, in sample order.
struct RoutingTable {
  std::vector<std::vector<int>> visitors;  // indexed by node id
};

RoutingTable routing_table(const DecisionGraph& g, const Dataset& ds);

// Nodes ordered by minimum edge distance from root, ascending id within a
// level. Every reachable node appears exactly once.
std::vector<int> breadth_first_order(const DecisionGraph& g);

int split_count(const DecisionGraph& g);
int leaf_count(const DecisionGraph& g);

struct PathLengthStats {
  double mean = 0.0;
  double stddev = 0.0;
};

// Mean/sd over samples of the number of internal nodes on the root-leaf path.
PathLengthStats avg_path_length(const DecisionGraph& g, const Dataset& ds);

// Collapses all leaves of equal class onto one node; never changes any
// prediction. Afterwards leaf_count <= n_classes.
DecisionGraph merge_equivalent_leaves(const DecisionGraph& g);

// Removes nodes visited by no training sample and bypasses internal nodes
// whose samples all exit one side; training predictions are unchanged.
DecisionGraph prune_dead_nodes(const DecisionGraph& g, const Dataset& ds);

// Drops arena nodes unreachable from root (ids are renumbered densely,
// preserving relative order).
DecisionGraph drop_unreachable(const DecisionGraph& g);

// Graphviz DOT text. With a dataset, nodes are filled by dominant class
// (strictly more than half of the visiting samples); otherwise every node
// gets the neutral "mixed" color.
std::string to_dot(const DecisionGraph& g, const Dataset* ds = nullptr);

// Model JSON schema v1 (lossless round-trip, full-precision thresholds).
std::string to_json(const DecisionGraph& g);
DecisionGraph from_json(const std::string& text);

DecisionGraph tree_to_graph(const Tree& tree);

}  // namespace tnt
