#pragma once

#include <cstdint>
#include <optional>

#include "tnt/dataset.hpp"
#include "tnt/graph.hpp"

namespace tnt {

struct NdgConfig {
  double C = 3e-4;          // complexity penalty per created internal node
  int max_iterations = 1000;
  std::uint64_t seed = 0;
};

struct LeafSplit {
  int feature = -1;
  double threshold = 0.0;
  int left_label = 0;
  int right_label = 0;
};

struct LeafSplitGain {
  double gain = 0.0;  // misclassification-fraction reduction minus C
  std::optional<LeafSplit> split;
};

// Best axis-aligned split of the leaf's visitors by training-accuracy gain,
// in misclassification-fraction units of the full training set, minus C.
LeafSplitGain leaf_split_gain(const DecisionGraph& g, int leaf,
                              const Dataset& ds, double C);

struct LeafMergeGain {
  double gain = 0.0;  // training-accuracy change (never positive); no C term
  int merged_label = 0;
};

LeafMergeGain leaf_merge_gain(const DecisionGraph& g, int leaf_a, int leaf_b,
                              const Dataset& ds);

// Greedy split/merge construction: applies the single maximum-gain operation
// per iteration (ties prefer split over merge, then the lowest node id) and
// stops on non-positive gain or after max_iterations.
DecisionGraph fit_ndg(const Dataset& ds, const NdgConfig& cfg);

}  // namespace tnt
