#pragma once

#include <cstdint>
#include <functional>
#include <map>

#include "tnt/cart.hpp"
#include "tnt/dataset.hpp"
#include "tnt/graph.hpp"

namespace tnt {

struct TnTConfig {
  double C = 1e-3;         // cost-complexity pruning coefficient
  int n1 = 2;              // merging phases
  int n2 = 5;              // grow/optimize rounds per phase
  int fine_tune_rounds = 0;
  std::uint64_t seed = 0;
  int min_subset_size = 1;
};

/// Micro trees pending merge, keyed by graph node id. A tree pending on an
/// internal node is a binary router: micro-leaf label 0 forwards to the
/// node's original left child, label 1 to its right child. A tree pending on
/// a leaf node is a K-class predictor whose leaves become graph leaves.
/// While pending, a node's micro tree overrides its routing everywhere.
using PendingMicroTrees = std::map<int, Tree>;

struct SensitiveSubset {
  std::vector<int> rows;    // dataset row indices
  std::vector<int> labels;  // binary routing labels / original class labels
};

// Visiting samples whose final prediction correctness flips with the node's
// left/right decision; label 0 where only the left child classifies the
// sample correctly, 1 where only the right child does.
SensitiveSubset sensitive_subset_internal(const DecisionGraph& g, int node,
                                          const Dataset& ds,
                                          std::span<const int> visiting);

// For leaves the whole visiting set with original labels is sensitive.
SensitiveSubset sensitive_subset_leaf(const DecisionGraph& g, int node,
                                      const Dataset& ds,
                                      std::span<const int> visiting);

// Sample-weighted pruning coefficient C_i = C * n_total / n_subset.
double regularization_coeff(double C, std::size_t n_total,
                            std::size_t n_subset);

// One pass over the graph in breadth-first order: recompute every node's
// sensitive subset under the current micro-tree overlays and refit its
// pending micro tree (wholesale replacement).
PendingMicroTrees grow_round(const DecisionGraph& g, const Dataset& ds,
                             const TnTConfig& cfg,
                             const PendingMicroTrees& pending,
                             std::span<const double> weights = {});

// Structurally splices every pending micro tree into the graph, sharing the
// replaced node's original children among micro-leaves, then removes dead
// nodes and re-validates.
DecisionGraph merge_phase(const DecisionGraph& g,
                          const PendingMicroTrees& pending, const Dataset& ds);

// Algorithm: start from a single majority-class leaf, run n1 phases of
// (n2 grow rounds + one merge), dead-node pruning after every merge.
DecisionGraph fit_tnt(const Dataset& ds, const TnTConfig& cfg,
                      std::span<const double> weights = {});

// Alternating optimization on a fixed topology: internal splits are reset to
// the 0-1-optimal axis split over their sensitive subset (incumbent split
// kept when it ties), leaves to the dominant class of their visitors.
// `on_node_update`, when set, fires after every individual node update.
DecisionGraph fine_tune(
    const DecisionGraph& g, const Dataset& ds, int rounds,
    const std::function<void(const DecisionGraph&)>& on_node_update = {});

}  // namespace tnt
