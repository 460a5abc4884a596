#include "tnt/cart.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "tnt/errors.hpp"

namespace tnt {

namespace {

constexpr double kGainEps = 1e-12;
constexpr double kTieAbs = 1e-15;

bool strictly_better(double gain, double best) {
  return gain > best + kGainEps * std::max(1.0, std::abs(best));
}

double gini_from_sumsq(double sumsq, double total) {
  return 1.0 - sumsq / (total * total);
}

struct SortedColumn {
  double value;
  int label;
  double weight;
};

// Split search shared by the public API and the tree growers. `row_labels`
// runs parallel to `rows`; `weights` is dataset-indexed (empty = uniform).
std::optional<SplitCandidate> best_split_impl(const Dataset& ds,
                                              std::span<const int> rows,
                                              std::span<const int> row_labels,
                                              std::span<const double> weights,
                                              int n_classes, int min_child) {
  const int n = static_cast<int>(rows.size());
  if (n < 2) return std::nullopt;

  std::vector<double> parent(n_classes, 0.0);
  double total = 0.0, parent_sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = weights.empty() ? 1.0 : weights[rows[i]];
    parent[row_labels[i]] += w;
    total += w;
  }
  if (!(total > 0.0)) return std::nullopt;
  for (double h : parent) parent_sumsq += h * h;
  if (parent_sumsq >= total * total * (1.0 - 1e-15))
    return std::nullopt;  // effectively pure
  const double parent_gini = gini_from_sumsq(parent_sumsq, total);

  std::vector<SortedColumn> col(n);
  std::vector<double> left(n_classes);
  SplitCandidate best;
  double best_gain = 0.0;
  bool found = false;

  for (int f = 0; f < ds.n_features; ++f) {
    for (int i = 0; i < n; ++i)
      col[i] = {ds.at(rows[i], f), row_labels[i],
                weights.empty() ? 1.0 : weights[rows[i]]};
    std::sort(col.begin(), col.end(),
              [](const SortedColumn& a, const SortedColumn& b) {
                return a.value < b.value;
              });
    if (col.front().value == col.back().value) continue;

    std::fill(left.begin(), left.end(), 0.0);
    double left_total = 0.0, left_sumsq = 0.0, right_sumsq = parent_sumsq;
    for (int i = 0; i + 1 < n; ++i) {
      const double w = col[i].weight;
      double& hl = left[col[i].label];
      left_sumsq += w * (2.0 * hl + w);
      hl += w;
      left_total += w;
      const double hr = parent[col[i].label] - hl;  // right count after move
      right_sumsq -= w * (2.0 * hr + w);
      if (col[i + 1].value <= col[i].value) continue;
      if (i + 1 < min_child || n - i - 1 < min_child) continue;
      const double thr = col[i].value + (col[i + 1].value - col[i].value) / 2;
      if (!(col[i].value < thr && thr <= col[i + 1].value)) continue;
      const double right_total = total - left_total;
      if (!(left_total > 0.0) || !(right_total > 0.0)) continue;
      const double child_risk =
          (left_total * gini_from_sumsq(left_sumsq, left_total) +
           right_total * gini_from_sumsq(right_sumsq, right_total)) /
          total;
      const double gain = parent_gini - child_risk;
      if (strictly_better(gain, found ? best_gain : 0.0)) {
        best = {f, thr, gain};
        best_gain = gain;
        found = true;
      }
    }
  }
  if (!found || best_gain <= kTieAbs) return std::nullopt;
  return best;
}

std::vector<double> class_histogram(std::span<const int> rows,
                                    std::span<const int> row_labels,
                                    std::span<const double> weights,
                                    int n_classes) {
  std::vector<double> hist(n_classes, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    hist[row_labels[i]] += weights.empty() ? 1.0 : weights[rows[i]];
  return hist;
}

int weighted_majority(std::span<const double> hist,
                      std::span<const int> rows,
                      std::span<const int> row_labels) {
  double total = 0.0;
  for (double h : hist) total += h;
  if (total > 0.0) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(hist.size()); ++c)
      if (hist[c] > hist[best]) best = c;
    return best;
  }
  // Zero-weight subset: fall back to plain counts.
  std::vector<int> counts(hist.size(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) ++counts[row_labels[i]];
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c)
    if (counts[c] > counts[best]) best = c;
  return best;
}

}  // namespace

int Tree::split_count() const {
  int n = 0;
  for (const auto& node : nodes) n += node.is_leaf() ? 0 : 1;
  return n;
}

int Tree::leaf_count() const {
  int n = 0;
  for (const auto& node : nodes) n += node.is_leaf() ? 1 : 0;
  return n;
}

double gini(std::span<const double> class_weights) {
  double total = 0.0;
  for (double w : class_weights) {
    if (!(w >= 0.0)) throw DataError("negative histogram entry");
    total += w;
  }
  if (!(total > 0.0)) throw DataError("all-zero class histogram");
  double sumsq = 0.0;
  for (double w : class_weights) sumsq += w * w;
  return gini_from_sumsq(sumsq, total);
}

std::optional<SplitCandidate> best_split(const Dataset& ds,
                                         std::span<const int> rows,
                                         std::span<const double> weights) {
  std::vector<int> row_labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    row_labels[i] = ds.labels[rows[i]];
  return best_split_impl(ds, rows, row_labels, weights, ds.n_classes, 1);
}

Tree fit_cart_on(const Dataset& ds, std::span<const int> rows,
                 std::span<const int> row_labels,
                 std::span<const double> weights, int n_classes,
                 const GrowMode& mode) {
  if (rows.empty()) throw DataError("cannot fit a tree on zero samples");
  Tree tree;
  tree.n_features = ds.n_features;
  tree.n_classes = n_classes;

  auto make_node = [&](std::span<const int> r, std::span<const int> l) {
    TreeNode node;
    node.class_weights = class_histogram(r, l, weights, n_classes);
    node.label = weighted_majority(node.class_weights, r, l);
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size()) - 1;
  };

  if (std::holds_alternative<DepthFirst>(mode)) {
    const int min_leaf = std::max(1, std::get<DepthFirst>(mode).min_leaf_size);
    std::function<int(std::vector<int>&, std::vector<int>&)> grow =
        [&](std::vector<int>& r, std::vector<int>& l) -> int {
      const int id = make_node(r, l);
      auto cand = best_split_impl(ds, r, l, weights, n_classes, min_leaf);
      if (!cand) return id;
      std::vector<int> lr, ll, rr, rl;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (ds.at(r[i], cand->feature) < cand->threshold) {
          lr.push_back(r[i]);
          ll.push_back(l[i]);
        } else {
          rr.push_back(r[i]);
          rl.push_back(l[i]);
        }
      }
      r.clear();
      l.clear();
      tree.nodes[id].feature = cand->feature;
      tree.nodes[id].threshold = cand->threshold;
      const int left_id = grow(lr, ll);
      tree.nodes[id].left = left_id;
      const int right_id = grow(rr, rl);
      tree.nodes[id].right = right_id;
      return id;
    };
    std::vector<int> r(rows.begin(), rows.end());
    std::vector<int> l(row_labels.begin(), row_labels.end());
    tree.root = grow(r, l);
    return tree;
  }

  // Best-first: repeatedly expand the frontier leaf whose best split gives
  // the largest total weighted impurity decrease.
  const int max_splits = std::get<BestFirst>(mode).max_splits;
  struct FrontierEntry {
    double key;  // node weight * local gain
    int node;
    SplitCandidate cand;
    std::vector<int> rows, labels;
  };
  auto cmp = [](const FrontierEntry& a, const FrontierEntry& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.node > b.node;  // older node wins exact ties
  };
  std::priority_queue<FrontierEntry, std::vector<FrontierEntry>,
                      decltype(cmp)>
      frontier(cmp);

  auto enqueue = [&](int id, std::vector<int>&& r, std::vector<int>&& l) {
    auto cand = best_split_impl(ds, r, l, weights, n_classes, 1);
    if (!cand) return;
    double node_weight = 0.0;
    for (double h : tree.nodes[id].class_weights) node_weight += h;
    frontier.push({node_weight * cand->gain, id, *cand, std::move(r),
                   std::move(l)});
  };

  std::vector<int> r(rows.begin(), rows.end());
  std::vector<int> l(row_labels.begin(), row_labels.end());
  tree.root = make_node(r, l);
  enqueue(tree.root, std::move(r), std::move(l));

  int splits = 0;
  while (splits < max_splits && !frontier.empty()) {
    FrontierEntry top =
        std::move(const_cast<FrontierEntry&>(frontier.top()));
    frontier.pop();
    std::vector<int> lr, ll, rr, rl;
    for (std::size_t i = 0; i < top.rows.size(); ++i) {
      if (ds.at(top.rows[i], top.cand.feature) < top.cand.threshold) {
        lr.push_back(top.rows[i]);
        ll.push_back(top.labels[i]);
      } else {
        rr.push_back(top.rows[i]);
        rl.push_back(top.labels[i]);
      }
    }
    tree.nodes[top.node].feature = top.cand.feature;
    tree.nodes[top.node].threshold = top.cand.threshold;
    const int left_id = make_node(lr, ll);
    tree.nodes[top.node].left = left_id;
    const int right_id = make_node(rr, rl);
    tree.nodes[top.node].right = right_id;
    enqueue(left_id, std::move(lr), std::move(ll));
    enqueue(right_id, std::move(rr), std::move(rl));
    ++splits;
  }
  return tree;
}

Tree fit_cart(const Dataset& ds, std::span<const double> weights,
              const GrowMode& mode) {
  std::vector<int> rows(ds.n_rows());
  for (int i = 0; i < ds.n_rows(); ++i) rows[i] = i;
  return fit_cart_on(ds, rows, ds.labels, weights, ds.n_classes, mode);
}

namespace {

void check_histograms(const Tree& tree) {
  for (const auto& node : tree.nodes)
    if (static_cast<int>(node.class_weights.size()) != tree.n_classes)
      throw ModelError("histogram/tree mismatch: node histogram size " +
                       std::to_string(node.class_weights.size()) +
                       " != n_classes " + std::to_string(tree.n_classes));
}

struct WeakestLink {
  std::vector<double> alphas;              // strictly increasing
  std::vector<std::vector<int>> batches;   // nodes collapsed at each alpha
  std::vector<int> split_counts;           // splits surviving after the batch
};

// Full weakest-link pruning sequence. `collapsed` nodes behave as leaves.
WeakestLink weakest_link_sequence(const Tree& tree) {
  check_histograms(tree);
  WeakestLink seq;
  if (tree.empty()) return seq;
  double total_weight = 0.0;
  for (double h : tree.nodes[tree.root].class_weights) total_weight += h;
  if (!(total_weight > 0.0)) return seq;

  const int n = static_cast<int>(tree.nodes.size());
  std::vector<char> collapsed(n, 0);

  auto leaf_like = [&](int id) {
    return tree.nodes[id].is_leaf() || collapsed[id];
  };
  auto collapse_risk = [&](int id) {
    double w = 0.0;
    for (double h : tree.nodes[id].class_weights) w += h;
    if (!(w > 0.0)) return 0.0;
    return (w / total_weight) * gini(tree.nodes[id].class_weights);
  };

  struct SubtreeStat {
    double risk = 0.0;
    int internals = 0;
  };
  std::vector<SubtreeStat> stat(n);
  std::function<void(int)> accumulate = [&](int id) {
    if (leaf_like(id)) {
      stat[id] = {collapse_risk(id), 0};
      return;
    }
    accumulate(tree.nodes[id].left);
    accumulate(tree.nodes[id].right);
    stat[id].risk =
        stat[tree.nodes[id].left].risk + stat[tree.nodes[id].right].risk;
    stat[id].internals = 1 + stat[tree.nodes[id].left].internals +
                         stat[tree.nodes[id].right].internals;
  };

  int live_splits = tree.split_count();
  while (live_splits > 0) {
    accumulate(tree.root);
    double g_min = std::numeric_limits<double>::infinity();
    std::function<void(int)> scan = [&](int id) {
      if (leaf_like(id)) return;
      double g = (collapse_risk(id) - stat[id].risk) / stat[id].internals;
      g_min = std::min(g_min, std::max(0.0, g));
      scan(tree.nodes[id].left);
      scan(tree.nodes[id].right);
    };
    scan(tree.root);
    const double cut = g_min * (1.0 + kGainEps) + kTieAbs;
    std::vector<int> batch;
    std::function<void(int)> collapse_pass = [&](int id) {
      if (leaf_like(id)) return;
      double g = std::max(
          0.0, (collapse_risk(id) - stat[id].risk) / stat[id].internals);
      if (g <= cut) {
        collapsed[id] = 1;
        batch.push_back(id);
        live_splits -= stat[id].internals;
        return;  // descendants vanish with this node
      }
      collapse_pass(tree.nodes[id].left);
      collapse_pass(tree.nodes[id].right);
    };
    collapse_pass(tree.root);
    seq.alphas.push_back(g_min);
    seq.batches.push_back(std::move(batch));
    seq.split_counts.push_back(live_splits);
  }
  return seq;
}

Tree materialize_pruned(const Tree& tree, const std::vector<char>& collapsed) {
  Tree out;
  out.root = -1;
  out.n_features = tree.n_features;
  out.n_classes = tree.n_classes;
  if (tree.empty()) return out;
  std::function<int(int)> copy = [&](int id) -> int {
    const TreeNode& src = tree.nodes[id];
    TreeNode node;
    node.label = src.label;
    node.class_weights = src.class_weights;
    const int out_id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(std::move(node));
    if (!src.is_leaf() && !collapsed[id]) {
      out.nodes[out_id].feature = src.feature;
      out.nodes[out_id].threshold = src.threshold;
      const int l = copy(src.left);
      out.nodes[out_id].left = l;
      const int r = copy(src.right);
      out.nodes[out_id].right = r;
    }
    return out_id;
  };
  out.root = copy(tree.root);
  return out;
}

}  // namespace

PruneSchedule prune_schedule(const Tree& tree) {
  WeakestLink seq = weakest_link_sequence(tree);
  PruneSchedule schedule;
  for (std::size_t i = 0; i < seq.alphas.size(); ++i)
    schedule.entries.push_back({seq.alphas[i], seq.split_counts[i]});
  if (schedule.entries.empty()) schedule.entries.push_back({0.0, 0});
  return schedule;
}

Tree ccp_prune(const Tree& tree, double alpha) {
  if (!(alpha >= 0.0)) throw DataError("alpha must be non-negative");
  WeakestLink seq = weakest_link_sequence(tree);
  std::vector<char> collapsed(tree.nodes.size(), 0);
  const double cut = alpha * (1.0 + kGainEps) + kTieAbs;
  for (std::size_t i = 0; i < seq.alphas.size(); ++i) {
    if (seq.alphas[i] > cut) break;
    for (int id : seq.batches[i]) collapsed[id] = 1;
  }
  return materialize_pruned(tree, collapsed);
}

int tree_predict(const Tree& tree, std::span<const double> x) {
  if (static_cast<int>(x.size()) != tree.n_features)
    throw DataError("feature dimension mismatch: expected " +
                    std::to_string(tree.n_features) + ", got " +
                    std::to_string(x.size()));
  int id = tree.root;
  while (!tree.nodes[id].is_leaf())
    id = x[tree.nodes[id].feature] < tree.nodes[id].threshold
             ? tree.nodes[id].left
             : tree.nodes[id].right;
  return tree.nodes[id].label;
}

}  // namespace tnt
