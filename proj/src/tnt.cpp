#include "tnt/tnt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tnt/errors.hpp"

namespace tnt {

namespace {

// Routing with pending micro trees active: a node with a pending tree routes
// through it (internal replacement forwards micro-leaf 0/1 to the node's
// original children; leaf replacement terminates in the micro tree).
class OverlayRouter {
 public:
  OverlayRouter(const DecisionGraph& g, const PendingMicroTrees& pending)
      : g_(g), pending_(pending) {}

  int predict_from(int start, const Dataset& ds, int row) const {
    int id = start;
    while (true) {
      auto it = pending_.find(id);
      if (it != pending_.end()) {
        const Tree& micro = it->second;
        int m = micro.root;
        while (!micro.nodes[m].is_leaf()) {
          const TreeNode& tn = micro.nodes[m];
          m = ds.at(row, tn.feature) < tn.threshold ? tn.left : tn.right;
        }
        const int verdict = micro.nodes[m].label;
        if (g_.nodes[id].is_leaf()) return verdict;
        id = verdict == 0 ? g_.nodes[id].left : g_.nodes[id].right;
      } else if (g_.nodes[id].is_leaf()) {
        return g_.nodes[id].label;
      } else {
        const GraphNode& node = g_.nodes[id];
        id = ds.at(row, node.feature) < node.threshold ? node.left
                                                       : node.right;
      }
    }
  }

  // Visiting rows per graph node under overlay routing.
  std::vector<std::vector<int>> visitors(const Dataset& ds) const {
    std::vector<std::vector<int>> vis(g_.nodes.size());
    for (int row = 0; row < ds.n_rows(); ++row) {
      int id = g_.root;
      while (true) {
        vis[id].push_back(row);
        auto it = pending_.find(id);
        if (it != pending_.end()) {
          const Tree& micro = it->second;
          int m = micro.root;
          while (!micro.nodes[m].is_leaf()) {
            const TreeNode& tn = micro.nodes[m];
            m = ds.at(row, tn.feature) < tn.threshold ? tn.left : tn.right;
          }
          if (g_.nodes[id].is_leaf()) break;
          id = micro.nodes[m].label == 0 ? g_.nodes[id].left
                                         : g_.nodes[id].right;
        } else if (g_.nodes[id].is_leaf()) {
          break;
        } else {
          const GraphNode& node = g_.nodes[id];
          id = ds.at(row, node.feature) < node.threshold ? node.left
                                                         : node.right;
        }
      }
    }
    return vis;
  }

 private:
  const DecisionGraph& g_;
  const PendingMicroTrees& pending_;
};

Tree single_leaf_tree(int label, int n_features, int n_classes) {
  Tree t;
  t.n_features = n_features;
  t.n_classes = n_classes;
  TreeNode leaf;
  leaf.label = label;
  leaf.class_weights.assign(n_classes, 0.0);
  t.nodes.push_back(std::move(leaf));
  t.root = 0;
  return t;
}

SensitiveSubset build_internal_subset(std::span<const int> visiting,
                                      std::span<const int> labels,
                                      std::span<const int> y_left,
                                      std::span<const int> y_right) {
  SensitiveSubset out;
  for (std::size_t i = 0; i < visiting.size(); ++i) {
    const bool left_ok = labels[i] == y_left[i];
    const bool right_ok = labels[i] == y_right[i];
    if (left_ok == right_ok) continue;  // insensitive to this node
    out.rows.push_back(visiting[i]);
    out.labels.push_back(left_ok ? 0 : 1);
  }
  return out;
}

int weighted_majority_label(std::span<const int> rows,
                            std::span<const int> labels,
                            std::span<const double> weights, int n_classes) {
  std::vector<double> hist(n_classes, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    hist[labels[i]] += weights.empty() ? 1.0 : weights[rows[i]];
  int best = 0;
  for (int c = 1; c < n_classes; ++c)
    if (hist[c] > hist[best]) best = c;
  return best;
}

bool single_class(std::span<const int> labels) {
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] != labels[0]) return false;
  return true;
}

}  // namespace

SensitiveSubset sensitive_subset_internal(const DecisionGraph& g, int node,
                                          const Dataset& ds,
                                          std::span<const int> visiting) {
  if (g.nodes[node].is_leaf())
    throw ModelError("sensitive_subset_internal called on a leaf");
  std::vector<int> labels(visiting.size());
  for (std::size_t i = 0; i < visiting.size(); ++i)
    labels[i] = ds.labels[visiting[i]];
  std::vector<int> y_left = infer_from(g, g.nodes[node].left, ds, visiting);
  std::vector<int> y_right = infer_from(g, g.nodes[node].right, ds, visiting);
  return build_internal_subset(visiting, labels, y_left, y_right);
}

SensitiveSubset sensitive_subset_leaf(const DecisionGraph& g, int node,
                                      const Dataset& ds,
                                      std::span<const int> visiting) {
  (void)g;
  (void)node;
  SensitiveSubset out;
  out.rows.assign(visiting.begin(), visiting.end());
  out.labels.reserve(visiting.size());
  for (int r : visiting) out.labels.push_back(ds.labels[r]);
  return out;
}

double regularization_coeff(double C, std::size_t n_total,
                            std::size_t n_subset) {
  if (n_subset == 0) throw DataError("regularization_coeff: empty subset");
  return C * (static_cast<double>(n_total) / static_cast<double>(n_subset));
}

PendingMicroTrees grow_round(const DecisionGraph& g, const Dataset& ds,
                             const TnTConfig& cfg,
                             const PendingMicroTrees& pending,
                             std::span<const double> weights) {
  PendingMicroTrees out = pending;
  const int min_subset = std::max(1, cfg.min_subset_size);
  const std::size_t m = static_cast<std::size_t>(ds.n_rows());

  // Nodes are swept in breadth-first order. Peers within a level are
  // mutually non-descendant, so one routing snapshot per level is exactly
  // equivalent to resampling the routing after every single node update.
  const std::vector<int> order = breadth_first_order(g);
  OverlayRouter router(g, out);

  std::vector<int> level_of(g.nodes.size(), -1);
  {
    std::vector<int> queue{g.root};
    level_of[g.root] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      int id = queue[q];
      const GraphNode& node = g.nodes[id];
      if (node.is_leaf()) continue;
      for (int child : {node.left, node.right}) {
        if (level_of[child] < 0) {
          level_of[child] = level_of[id] + 1;
          queue.push_back(child);
        }
      }
    }
  }

  std::size_t pos = 0;
  while (pos < order.size()) {
    const int current_level = level_of[order[pos]];
    std::size_t end = pos;
    while (end < order.size() && level_of[order[end]] == current_level) ++end;

    std::vector<std::vector<int>> vis = router.visitors(ds);
    for (std::size_t k = pos; k < end; ++k) {
      const int node = order[k];
      const std::vector<int>& visiting = vis[node];
      if (visiting.empty()) continue;  // dead node, removed at merge

      if (g.nodes[node].is_leaf()) {
        SensitiveSubset ss = sensitive_subset_leaf(g, node, ds, visiting);
        if (static_cast<int>(ss.rows.size()) < min_subset ||
            single_class(ss.labels)) {
          out[node] = single_leaf_tree(
              weighted_majority_label(ss.rows, ss.labels, weights,
                                      ds.n_classes),
              ds.n_features, ds.n_classes);
        } else {
          Tree micro = fit_cart_on(ds, ss.rows, ss.labels, weights,
                                   ds.n_classes, DepthFirst{1});
          out[node] = ccp_prune(
              micro, regularization_coeff(cfg.C, m, ss.rows.size()));
        }
        continue;
      }

      // Internal node: micro tree learns the binary routing target.
      std::vector<int> labels(visiting.size());
      for (std::size_t j = 0; j < visiting.size(); ++j)
        labels[j] = ds.labels[visiting[j]];
      std::vector<int> y_left(visiting.size()), y_right(visiting.size());
      for (std::size_t j = 0; j < visiting.size(); ++j) {
        y_left[j] = router.predict_from(g.nodes[node].left, ds, visiting[j]);
        y_right[j] = router.predict_from(g.nodes[node].right, ds, visiting[j]);
      }
      SensitiveSubset ss =
          build_internal_subset(visiting, labels, y_left, y_right);

      if (ss.rows.empty()) {
        // Keep the node's incumbent behavior: route everything toward the
        // side the current split favors.
        const GraphNode& n = g.nodes[node];
        std::int64_t to_left = 0;
        for (int r : visiting)
          if (ds.at(r, n.feature) < n.threshold) ++to_left;
        const int side =
            2 * to_left >= static_cast<std::int64_t>(visiting.size()) ? 0 : 1;
        out[node] = single_leaf_tree(side, ds.n_features, 2);
      } else if (static_cast<int>(ss.rows.size()) < min_subset ||
                 single_class(ss.labels)) {
        out[node] = single_leaf_tree(
            weighted_majority_label(ss.rows, ss.labels, weights, 2),
            ds.n_features, 2);
      } else {
        Tree micro =
            fit_cart_on(ds, ss.rows, ss.labels, weights, 2, DepthFirst{1});
        out[node] =
            ccp_prune(micro, regularization_coeff(cfg.C, m, ss.rows.size()));
      }
    }
    pos = end;
  }
  return out;
}

DecisionGraph merge_phase(const DecisionGraph& g,
                          const PendingMicroTrees& pending,
                          const Dataset& ds) {
  DecisionGraph out;
  out.n_features = g.n_features;
  out.n_classes = g.n_classes;
  std::vector<int> memo(g.nodes.size(), -1);

  std::function<int(int)> materialize = [&](int id) -> int {
    if (memo[id] >= 0) return memo[id];
    const GraphNode& node = g.nodes[id];
    auto it = pending.find(id);
    int result;
    if (it == pending.end()) {
      if (node.is_leaf()) {
        result = static_cast<int>(out.nodes.size());
        out.nodes.emplace_back();
        out.nodes[result].label = node.label;
      } else {
        result = static_cast<int>(out.nodes.size());
        out.nodes.emplace_back();
        out.nodes[result].feature = node.feature;
        out.nodes[result].threshold = node.threshold;
        const int l = materialize(node.left);
        out.nodes[result].left = l;
        const int r = materialize(node.right);
        out.nodes[result].right = r;
      }
    } else if (node.is_leaf()) {
      // Leaf replacement: micro-tree leaves become graph leaves.
      const Tree& micro = it->second;
      std::function<int(int)> splice = [&](int tid) -> int {
        const TreeNode& tn = micro.nodes[tid];
        const int out_id = static_cast<int>(out.nodes.size());
        out.nodes.emplace_back();
        if (tn.is_leaf()) {
          out.nodes[out_id].label = tn.label;
        } else {
          out.nodes[out_id].feature = tn.feature;
          out.nodes[out_id].threshold = tn.threshold;
          const int l = splice(tn.left);
          out.nodes[out_id].left = l;
          const int r = splice(tn.right);
          out.nodes[out_id].right = r;
        }
        return out_id;
      };
      result = splice(micro.root);
    } else {
      // Internal replacement: micro-leaf 0 joins the original left child,
      // micro-leaf 1 the original right child (shared children make the DAG).
      const Tree& micro = it->second;
      std::function<int(int)> splice = [&](int tid) -> int {
        const TreeNode& tn = micro.nodes[tid];
        if (tn.is_leaf()) {
          if (tn.label != 0 && tn.label != 1)
            throw ModelError("internal-replacement micro tree has a "
                             "non-binary leaf label");
          return materialize(tn.label == 0 ? node.left : node.right);
        }
        const int out_id = static_cast<int>(out.nodes.size());
        out.nodes.emplace_back();
        out.nodes[out_id].feature = tn.feature;
        out.nodes[out_id].threshold = tn.threshold;
        const int l = splice(tn.left);
        out.nodes[out_id].left = l;
        const int r = splice(tn.right);
        out.nodes[out_id].right = r;
        return out_id;
      };
      result = splice(micro.root);
    }
    memo[id] = result;
    return result;
  };

  out.root = materialize(g.root);
  validate(out);  // post-merge cycles mean an implementation bug
  return prune_dead_nodes(out, ds);
}

DecisionGraph fit_tnt(const Dataset& ds, const TnTConfig& cfg,
                      std::span<const double> weights) {
  ds.validate();
  if (cfg.n1 < 1 || cfg.n2 < 1)
    throw DataError("TnT requires n1 >= 1 and n2 >= 1");
  if (!(cfg.C >= 0.0)) throw DataError("TnT requires C >= 0");

  std::span<const double> w =
      weights.empty() && ds.has_weights()
          ? std::span<const double>(ds.weights)
          : weights;

  std::vector<int> all_rows(ds.n_rows());
  for (int i = 0; i < ds.n_rows(); ++i) all_rows[i] = i;
  const int majority =
      weighted_majority_label(all_rows, ds.labels, w, ds.n_classes);

  DecisionGraph g = single_leaf_graph(majority, ds.n_features, ds.n_classes);
  for (int phase = 0; phase < cfg.n1; ++phase) {
    PendingMicroTrees pending;
    for (int round = 0; round < cfg.n2; ++round)
      pending = grow_round(g, ds, cfg, pending, w);
    g = merge_phase(g, pending, ds);
  }
  return g;
}

namespace {

struct BinarySplitChoice {
  int feature;
  double threshold;
  double loss;
};

// Minimum weighted 0-1 loss axis split over (rows, binary labels); the
// incumbent is evaluated first and kept on ties.
BinarySplitChoice best_binary_split(const Dataset& ds,
                                    std::span<const int> rows,
                                    std::span<const int> labels,
                                    std::span<const double> weights,
                                    int inc_feature, double inc_threshold) {
  const int n = static_cast<int>(rows.size());
  auto weight_of = [&](int i) {
    return weights.empty() ? 1.0 : weights[rows[i]];
  };

  double total1 = 0.0, total0 = 0.0;
  for (int i = 0; i < n; ++i)
    (labels[i] == 1 ? total1 : total0) += weight_of(i);

  auto eval = [&](int f, double thr) {
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const bool goes_left = ds.at(rows[i], f) < thr;
      if (goes_left != (labels[i] == 0)) loss += weight_of(i);
    }
    return loss;
  };

  BinarySplitChoice best{inc_feature, inc_threshold,
                         eval(inc_feature, inc_threshold)};
  auto consider = [&](int f, double thr, double loss) {
    if (loss < best.loss - 1e-12 * std::max(1.0, best.loss))
      best = {f, thr, loss};
  };

  std::vector<std::pair<double, double>> col(n);  // (value, signed weight)
  for (int f = 0; f < ds.n_features; ++f) {
    for (int i = 0; i < n; ++i)
      col[i] = {ds.at(rows[i], f),
                labels[i] == 1 ? weight_of(i) : -weight_of(i)};
    std::sort(col.begin(), col.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (f == 0) {
      consider(0, col.front().first - 1.0, total0);  // everything right
      consider(0, col.back().first + 1.0, total1);   // everything left
    }
    // loss(cut) = (weight of 1s on the left) + (weight of 0s on the right)
    double ones_left = 0.0, zeros_left = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      if (col[i].second > 0)
        ones_left += col[i].second;
      else
        zeros_left -= col[i].second;
      if (col[i + 1].first <= col[i].first) continue;
      const double thr =
          col[i].first + (col[i + 1].first - col[i].first) / 2;
      if (!(col[i].first < thr && thr <= col[i + 1].first)) continue;
      consider(f, thr, ones_left + (total0 - zeros_left));
    }
  }
  return best;
}

}  // namespace

DecisionGraph fine_tune(
    const DecisionGraph& g, const Dataset& ds, int rounds,
    const std::function<void(const DecisionGraph&)>& on_node_update) {
  if (rounds < 0) throw DataError("fine_tune rounds must be >= 0");
  DecisionGraph out = g;
  std::span<const double> w =
      ds.has_weights() ? std::span<const double>(ds.weights)
                       : std::span<const double>();

  const std::vector<int> order = breadth_first_order(out);
  std::vector<int> level_of(out.nodes.size(), 0);
  {
    std::vector<int> level(out.nodes.size(), -1);
    std::vector<int> queue{out.root};
    level[out.root] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      int id = queue[q];
      if (out.nodes[id].is_leaf()) continue;
      for (int child : {out.nodes[id].left, out.nodes[id].right}) {
        if (level[child] < 0) {
          level[child] = level[id] + 1;
          queue.push_back(child);
        }
      }
    }
    level_of = std::move(level);
  }

  for (int round = 0; round < rounds; ++round) {
    std::size_t pos = 0;
    while (pos < order.size()) {
      const int current_level = level_of[order[pos]];
      std::size_t end = pos;
      while (end < order.size() && level_of[order[end]] == current_level)
        ++end;
      RoutingTable table = routing_table(out, ds);
      for (std::size_t k = pos; k < end; ++k) {
        const int id = order[k];
        const std::vector<int>& visiting = table.visitors[id];
        if (visiting.empty()) continue;
        GraphNode& node = out.nodes[id];
        if (node.is_leaf()) {
          std::vector<int> labels(visiting.size());
          for (std::size_t j = 0; j < visiting.size(); ++j)
            labels[j] = ds.labels[visiting[j]];
          node.label =
              weighted_majority_label(visiting, labels, w, out.n_classes);
        } else {
          SensitiveSubset ss =
              sensitive_subset_internal(out, id, ds, visiting);
          if (!ss.rows.empty()) {
            BinarySplitChoice choice =
                best_binary_split(ds, ss.rows, ss.labels, w, node.feature,
                                  node.threshold);
            node.feature = choice.feature;
            node.threshold = choice.threshold;
          }
        }
        if (on_node_update) on_node_update(out);
      }
      pos = end;
    }
  }
  return out;
}

}  // namespace tnt
