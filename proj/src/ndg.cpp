#include "tnt/ndg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tnt/errors.hpp"

namespace tnt {

namespace {

std::vector<int> count_by_class(const Dataset& ds,
                                std::span<const int> rows) {
  std::vector<int> counts(ds.n_classes, 0);
  for (int r : rows) ++counts[ds.labels[r]];
  return counts;
}

int majority_of(const std::vector<int>& counts) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c)
    if (counts[c] > counts[best]) best = c;
  return best;
}

// Best axis split of `rows` by raw correct-count gain. Ties: lower feature,
// then lower threshold.
struct RawSplit {
  int feature = -1;
  double threshold = 0.0;
  int correct_after = 0;
};

RawSplit best_accuracy_split(const Dataset& ds, std::span<const int> rows) {
  const int n = static_cast<int>(rows.size());
  RawSplit best;
  std::vector<int> counts = count_by_class(ds, rows);
  best.correct_after = counts[majority_of(counts)];  // no-split baseline

  std::vector<std::pair<double, int>> col(n);
  std::vector<int> left(ds.n_classes);
  for (int f = 0; f < ds.n_features; ++f) {
    for (int i = 0; i < n; ++i)
      col[i] = {ds.at(rows[i], f), ds.labels[rows[i]]};
    std::sort(col.begin(), col.end());
    if (col.front().first == col.back().first) continue;
    std::fill(left.begin(), left.end(), 0);
    int left_max = 0;
    for (int i = 0; i + 1 < n; ++i) {
      left_max = std::max(left_max, ++left[col[i].second]);
      if (col[i + 1].first <= col[i].first) continue;
      const double thr = col[i].first + (col[i + 1].first - col[i].first) / 2;
      if (!(col[i].first < thr && thr <= col[i + 1].first)) continue;
      int right_max = 0;
      for (int c = 0; c < ds.n_classes; ++c)
        right_max = std::max(right_max, counts[c] - left[c]);
      const int correct = left_max + right_max;
      if (correct > best.correct_after) {
        best = {f, thr, correct};
      }
    }
  }
  return best;
}

}  // namespace

LeafSplitGain leaf_split_gain(const DecisionGraph& g, int leaf,
                              const Dataset& ds, double C) {
  if (!g.nodes[leaf].is_leaf()) throw ModelError("node is not a leaf");
  RoutingTable table = routing_table(g, ds);
  const std::vector<int>& rows = table.visitors[leaf];
  const double m = static_cast<double>(ds.n_rows());

  LeafSplitGain out;
  if (rows.empty()) {
    out.gain = -C;
    return out;
  }
  std::vector<int> counts = count_by_class(ds, rows);
  const int correct_before = counts[majority_of(counts)];
  RawSplit raw = best_accuracy_split(ds, rows);
  out.gain = (raw.correct_after - correct_before) / m - C;
  if (raw.feature >= 0) {
    std::vector<int> lcounts(ds.n_classes, 0), rcounts(ds.n_classes, 0);
    for (int r : rows)
      ++(ds.at(r, raw.feature) < raw.threshold ? lcounts : rcounts)
          [ds.labels[r]];
    out.split = LeafSplit{raw.feature, raw.threshold, majority_of(lcounts),
                          majority_of(rcounts)};
  }
  return out;
}

LeafMergeGain leaf_merge_gain(const DecisionGraph& g, int leaf_a, int leaf_b,
                              const Dataset& ds) {
  if (!g.nodes[leaf_a].is_leaf() || !g.nodes[leaf_b].is_leaf())
    throw ModelError("leaf_merge_gain expects two leaves");
  RoutingTable table = routing_table(g, ds);
  const auto& rows_a = table.visitors[leaf_a];
  const auto& rows_b = table.visitors[leaf_b];
  std::vector<int> counts(ds.n_classes, 0);
  for (int r : rows_a) ++counts[ds.labels[r]];
  for (int r : rows_b) ++counts[ds.labels[r]];

  int correct_before = 0;
  {
    std::vector<int> ca = count_by_class(ds, rows_a);
    std::vector<int> cb = count_by_class(ds, rows_b);
    correct_before = ca[g.nodes[leaf_a].label] + cb[g.nodes[leaf_b].label];
  }
  LeafMergeGain out;
  out.merged_label = majority_of(counts);
  out.gain = (counts[out.merged_label] - correct_before) /
             static_cast<double>(ds.n_rows());
  return out;
}

DecisionGraph fit_ndg(const Dataset& ds, const NdgConfig& cfg) {
  ds.validate();
  if (!(cfg.C >= 0.0)) throw DataError("NDG requires C >= 0");
  if (cfg.max_iterations < 1) throw DataError("NDG requires N >= 1");

  std::vector<int> all_counts(ds.n_classes, 0);
  for (int y : ds.labels) ++all_counts[y];
  DecisionGraph g = single_leaf_graph(majority_of(all_counts), ds.n_features,
                                      ds.n_classes);

  const double m = static_cast<double>(ds.n_rows());
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    RoutingTable table = routing_table(g, ds);
    std::vector<int> leaves;
    for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id)
      if (g.nodes[id].is_leaf()) leaves.push_back(id);

    // Best split over all leaves.
    double best_split_gain = -std::numeric_limits<double>::infinity();
    int split_leaf = -1;
    RawSplit split_raw;
    for (int leaf : leaves) {
      const auto& rows = table.visitors[leaf];
      double gain = -cfg.C;
      RawSplit raw;
      if (!rows.empty()) {
        std::vector<int> counts = count_by_class(ds, rows);
        raw = best_accuracy_split(ds, rows);
        gain = (raw.correct_after - counts[majority_of(counts)]) / m - cfg.C;
      }
      if (raw.feature >= 0 && gain > best_split_gain) {
        best_split_gain = gain;
        split_leaf = leaf;
        split_raw = raw;
      }
    }

    // Best merge over all leaf pairs.
    double best_merge_gain = -std::numeric_limits<double>::infinity();
    int merge_a = -1, merge_b = -1, merge_label = 0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      for (std::size_t j = i + 1; j < leaves.size(); ++j) {
        std::vector<int> counts(ds.n_classes, 0);
        int correct_before = 0;
        {
          std::vector<int> ca = count_by_class(ds, table.visitors[leaves[i]]);
          std::vector<int> cb = count_by_class(ds, table.visitors[leaves[j]]);
          for (int c = 0; c < ds.n_classes; ++c) counts[c] = ca[c] + cb[c];
          correct_before = ca[g.nodes[leaves[i]].label] +
                           cb[g.nodes[leaves[j]].label];
        }
        const int label = majority_of(counts);
        const double gain = (counts[label] - correct_before) / m;
        if (gain > best_merge_gain) {
          best_merge_gain = gain;
          merge_a = leaves[i];
          merge_b = leaves[j];
          merge_label = label;
        }
      }
    }

    // Ties prefer split over merge; both searches already favor low ids.
    if (split_leaf >= 0 && best_split_gain > 0.0 &&
        best_split_gain >= best_merge_gain) {
      const auto& rows = table.visitors[split_leaf];
      std::vector<int> lcounts(ds.n_classes, 0), rcounts(ds.n_classes, 0);
      for (int r : rows)
        ++(ds.at(r, split_raw.feature) < split_raw.threshold ? lcounts
                                                             : rcounts)
            [ds.labels[r]];
      GraphNode left, right;
      left.label = majority_of(lcounts);
      right.label = majority_of(rcounts);
      const int left_id = static_cast<int>(g.nodes.size());
      g.nodes.push_back(left);
      const int right_id = static_cast<int>(g.nodes.size());
      g.nodes.push_back(right);
      g.nodes[split_leaf].feature = split_raw.feature;
      g.nodes[split_leaf].threshold = split_raw.threshold;
      g.nodes[split_leaf].left = left_id;
      g.nodes[split_leaf].right = right_id;
    } else if (merge_a >= 0 && best_merge_gain > 0.0) {
      for (auto& node : g.nodes) {
        if (node.is_leaf()) continue;
        if (node.left == merge_b) node.left = merge_a;
        if (node.right == merge_b) node.right = merge_a;
      }
      if (g.root == merge_b) g.root = merge_a;
      g.nodes[merge_a].label = merge_label;
      g = drop_unreachable(g);  // compacts the orphaned leaf away
    } else {
      break;
    }
  }
  g = prune_dead_nodes(g, ds);
  validate(g);
  return g;
}

}  // namespace tnt
