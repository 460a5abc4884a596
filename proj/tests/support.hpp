#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here deliberately avoids the library's own search/pruning code paths: the
// oracles enumerate exhaustively or recompute step by step so they stay valid
// checks against the real implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tnt/cart.hpp"
#include "tnt/dataset.hpp"
#include "tnt/ensemble.hpp"
#include "tnt/graph.hpp"
#include "tnt/rng.hpp"

namespace testsupport {

inline tnt::Dataset random_dataset(int m, int k, int n_classes,
                                   std::uint64_t seed,
                                   int value_levels = 0) {
  tnt::Dataset ds;
  ds.n_features = k;
  ds.n_classes = n_classes;
  for (int c = 0; c < n_classes; ++c)
    ds.class_names.push_back(std::to_string(c));
  tnt::Rng rng(seed);
  ds.values.reserve(static_cast<std::size_t>(m) * k);
  for (int i = 0; i < m; ++i) {
    for (int f = 0; f < k; ++f) {
      double v = tnt::next_unit(rng);
      if (value_levels > 0)
        v = std::floor(v * value_levels) / value_levels;  // forces ties
      ds.values.push_back(v);
    }
    ds.labels.push_back(static_cast<int>(tnt::next_below(rng, n_classes)));
  }
  // Guarantee every class appears so n_classes is honest.
  for (int c = 0; c < n_classes && c < m; ++c) ds.labels[c] = c;
  return ds;
}

inline double accuracy(std::span<const int> pred, std::span<const int> truth) {
  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Exhaustive best-split oracle: every (feature, midpoint) candidate, gains
// recomputed from scratch.
struct OracleSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

inline double oracle_gini(const std::vector<double>& hist) {
  double total = 0.0, sumsq = 0.0;
  for (double h : hist) total += h;
  for (double h : hist) sumsq += (h / total) * (h / total);
  return 1.0 - sumsq;
}

inline std::optional<OracleSplit> oracle_best_split(
    const tnt::Dataset& ds, std::span<const int> rows,
    std::span<const double> weights) {
  const int n = static_cast<int>(rows.size());
  if (n < 2) return std::nullopt;
  auto wof = [&](int r) { return weights.empty() ? 1.0 : weights[r]; };
  std::vector<double> parent(ds.n_classes, 0.0);
  double total = 0.0;
  for (int r : rows) {
    parent[ds.labels[r]] += wof(r);
    total += wof(r);
  }
  if (!(total > 0.0)) return std::nullopt;
  const double parent_gini = oracle_gini(parent);

  std::optional<OracleSplit> best;
  for (int f = 0; f < ds.n_features; ++f) {
    std::vector<double> values;
    for (int r : rows) values.push_back(ds.at(r, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double thr = values[i] + (values[i + 1] - values[i]) / 2;
      if (!(values[i] < thr && thr <= values[i + 1])) continue;
      std::vector<double> lh(ds.n_classes, 0.0), rh(ds.n_classes, 0.0);
      double lw = 0.0, rw = 0.0;
      for (int r : rows) {
        if (ds.at(r, f) < thr) {
          lh[ds.labels[r]] += wof(r);
          lw += wof(r);
        } else {
          rh[ds.labels[r]] += wof(r);
          rw += wof(r);
        }
      }
      if (!(lw > 0.0) || !(rw > 0.0)) continue;
      const double gain = parent_gini - (lw * oracle_gini(lh) +
                                         rw * oracle_gini(rh)) /
                                            total;
      if (!best || gain > best->gain + 1e-12 * std::max(1.0, best->gain))
        best = OracleSplit{f, thr, gain};
    }
  }
  if (best && best->gain <= 1e-12) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------
// Exhaustive pruned-subtree oracle for cost-complexity pruning. Enumerates
// every pruned subtree of the input (feasible for <= 6 splits) and returns
// the minimal objective R + alpha*|t| and the smallest split count achieving
// it within tolerance.
struct OraclePrune {
  double objective = 0.0;
  int split_count = 0;
};

inline OraclePrune oracle_ccp(const tnt::Tree& tree, double alpha) {
  double total_weight = 0.0;
  for (double h : tree.nodes[tree.root].class_weights) total_weight += h;
  struct Option {
    double risk;
    int splits;
  };
  std::vector<std::vector<Option>> memo(tree.nodes.size());
  auto collapse_risk = [&](int id) {
    const auto& hist = tree.nodes[id].class_weights;
    double w = 0.0;
    for (double h : hist) w += h;
    if (!(w > 0.0)) return 0.0;
    return (w / total_weight) * tnt::gini(hist);
  };
  std::function<const std::vector<Option>&(int)> options =
      [&](int id) -> const std::vector<Option>& {
    if (!memo[id].empty()) return memo[id];
    std::vector<Option> out{{collapse_risk(id), 0}};
    if (!tree.nodes[id].is_leaf()) {
      for (const Option& l : options(tree.nodes[id].left))
        for (const Option& r : options(tree.nodes[id].right))
          out.push_back({l.risk + r.risk, 1 + l.splits + r.splits});
    }
    memo[id] = std::move(out);
    return memo[id];
  };
  OraclePrune best{std::numeric_limits<double>::infinity(), 0};
  for (const Option& o : options(tree.root)) {
    const double obj = o.risk + alpha * o.splits;
    if (obj < best.objective - 1e-12 ||
        (std::abs(obj - best.objective) <= 1e-12 &&
         o.splits < best.split_count))
      best = {obj, o.splits};
  }
  return best;
}

inline double tree_objective(const tnt::Tree& tree, double alpha) {
  double total_weight = 0.0;
  for (double h : tree.nodes[tree.root].class_weights) total_weight += h;
  double risk = 0.0;
  for (const auto& node : tree.nodes) {
    if (!node.is_leaf()) continue;
    double w = 0.0;
    for (double h : node.class_weights) w += h;
    if (w > 0.0) risk += (w / total_weight) * tnt::gini(node.class_weights);
  }
  return risk + alpha * tree.split_count();
}

// ---------------------------------------------------------------------------
// Naive recursive inference oracle for graphs.
inline int oracle_infer(const tnt::DecisionGraph& g, int id,
                        std::span<const double> x, int depth = 0) {
  if (depth > static_cast<int>(g.nodes.size())) return -1;  // cycle guard
  const auto& node = g.nodes[id];
  if (node.is_leaf()) return node.label;
  return oracle_infer(g, x[node.feature] < node.threshold ? node.left
                                                          : node.right,
                      x, depth + 1);
}

// ---------------------------------------------------------------------------
// Independent SAMME trace: recomputes weights, stage errors, and alphas from
// the estimators' predictions alone.
struct SammeTrace {
  std::vector<double> errors;
  std::vector<double> alphas;
  std::vector<std::vector<double>> weights;  // weights entering each stage
};

inline SammeTrace oracle_samme(const tnt::Dataset& ds,
                               const std::vector<std::vector<int>>& stage_preds,
                               double learning_rate) {
  const int m = ds.n_rows();
  const int k = ds.n_classes;
  SammeTrace trace;
  std::vector<double> w(m, 1.0 / m);
  for (const auto& pred : stage_preds) {
    trace.weights.push_back(w);
    double err = 0.0;
    for (int i = 0; i < m; ++i)
      if (pred[i] != ds.labels[i]) err += w[i];
    trace.errors.push_back(err);
    if (err <= 0.0) {
      trace.alphas.push_back(std::log(1e12) + std::log(k - 1.0));
      break;
    }
    if (err >= 1.0 - 1.0 / k) break;
    const double alpha =
        learning_rate * (std::log((1.0 - err) / err) + std::log(k - 1.0));
    trace.alphas.push_back(alpha);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      if (pred[i] != ds.labels[i]) w[i] *= std::exp(alpha);
      total += w[i];
    }
    for (double& wi : w) wi /= total;
  }
  return trace;
}

// Random small tree fixture with populated histograms, built directly (not
// via fit_cart) so pruning oracles see zero-gain and unbalanced shapes too.
inline tnt::Tree random_tree_fixture(const tnt::Dataset& ds,
                                     std::uint64_t seed, int max_splits) {
  tnt::Rng rng(seed);
  tnt::Tree tree;
  tree.n_features = ds.n_features;
  tree.n_classes = ds.n_classes;

  struct Pending {
    int node;
    std::vector<int> rows;
  };
  std::vector<int> all(ds.n_rows());
  for (int i = 0; i < ds.n_rows(); ++i) all[i] = i;

  auto make_node = [&](const std::vector<int>& rows) {
    tnt::TreeNode node;
    node.class_weights.assign(ds.n_classes, 0.0);
    for (int r : rows) node.class_weights[ds.labels[r]] += 1.0;
    node.label = 0;
    for (int c = 1; c < ds.n_classes; ++c)
      if (node.class_weights[c] > node.class_weights[node.label])
        node.label = c;
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size()) - 1;
  };

  tree.root = make_node(all);
  std::vector<Pending> frontier{{tree.root, all}};
  const int target = static_cast<int>(tnt::next_below(rng, max_splits + 1));
  int splits = 0;
  while (splits < target && !frontier.empty()) {
    const std::size_t pick = tnt::next_below(rng, frontier.size());
    Pending cur = std::move(frontier[pick]);
    frontier.erase(frontier.begin() + pick);
    if (cur.rows.size() < 2) continue;
    const int f = static_cast<int>(tnt::next_below(rng, ds.n_features));
    std::vector<double> values;
    for (int r : cur.rows) values.push_back(ds.at(r, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.size() < 2) continue;
    const std::size_t cut = tnt::next_below(rng, values.size() - 1);
    const double thr = values[cut] + (values[cut + 1] - values[cut]) / 2;
    std::vector<int> lrows, rrows;
    for (int r : cur.rows)
      (ds.at(r, f) < thr ? lrows : rrows).push_back(r);
    if (lrows.empty() || rrows.empty()) continue;
    tree.nodes[cur.node].feature = f;
    tree.nodes[cur.node].threshold = thr;
    const int l = make_node(lrows);
    tree.nodes[cur.node].left = l;
    const int r = make_node(rrows);
    tree.nodes[cur.node].right = r;
    frontier.push_back({l, std::move(lrows)});
    frontier.push_back({r, std::move(rrows)});
    ++splits;
  }
  return tree;
}

}  // namespace testsupport
