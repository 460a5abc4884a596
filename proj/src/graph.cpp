#include "tnt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tnt/errors.hpp"

namespace tnt {

namespace {

void check_ref(const DecisionGraph& g, int id, const char* what) {
  if (id < 0 || id >= static_cast<int>(g.nodes.size()))
    throw ModelError(std::string("DanglingRef: ") + what + " id " +
                     std::to_string(id) + " outside arena of size " +
                     std::to_string(g.nodes.size()));
}

// Minimum edge-distance levels from root; -1 for unreachable nodes.
std::vector<int> bfs_levels(const DecisionGraph& g) {
  std::vector<int> level(g.nodes.size(), -1);
  check_ref(g, g.root, "root");
  std::deque<int> queue{g.root};
  level[g.root] = 0;
  while (!queue.empty()) {
    int id = queue.front();
    queue.pop_front();
    const GraphNode& node = g.nodes[id];
    if (node.is_leaf()) continue;
    check_ref(g, node.left, "left child");
    check_ref(g, node.right, "right child");
    for (int child : {node.left, node.right}) {
      if (level[child] < 0) {
        level[child] = level[id] + 1;
        queue.push_back(child);
      }
    }
  }
  return level;
}

}  // namespace

DecisionGraph single_leaf_graph(int label, int n_features, int n_classes) {
  DecisionGraph g;
  g.n_features = n_features;
  g.n_classes = n_classes;
  g.root = 0;
  GraphNode leaf;
  leaf.label = label;
  g.nodes.push_back(leaf);
  return g;
}

void validate(const DecisionGraph& g) {
  if (g.nodes.empty()) throw ModelError("graph has no nodes");
  check_ref(g, g.root, "root");
  const int n = static_cast<int>(g.nodes.size());

  // Kahn's algorithm over the arena detects cycles.
  std::vector<int> indegree(n, 0);
  for (const auto& node : g.nodes) {
    if (node.is_leaf()) continue;
    check_ref(g, node.left, "left child");
    check_ref(g, node.right, "right child");
    ++indegree[node.left];
    ++indegree[node.right];
  }
  std::deque<int> queue;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0) queue.push_back(i);
  int seen = 0;
  while (!queue.empty()) {
    int id = queue.front();
    queue.pop_front();
    ++seen;
    const GraphNode& node = g.nodes[id];
    if (node.is_leaf()) continue;
    for (int child : {node.left, node.right})
      if (--indegree[child] == 0) queue.push_back(child);
  }
  if (seen != n) throw ModelError("CycleError: graph contains a cycle");

  std::vector<int> level = bfs_levels(g);
  int internals = 0, leaves = 0;
  for (int i = 0; i < n; ++i) {
    if (level[i] < 0)
      throw ModelError("node " + std::to_string(i) +
                       " is unreachable from root");
    if (g.nodes[i].is_leaf()) {
      ++leaves;
      if (g.nodes[i].label < 0 ||
          (g.n_classes > 0 && g.nodes[i].label >= g.n_classes))
        throw ModelError("leaf class out of range");
    } else {
      ++internals;
      if (g.nodes[i].feature >= g.n_features)
        throw ModelError("split feature out of range");
    }
  }
  if (leaves > internals + 1)
    throw ModelError("leaf_count exceeds internal_count + 1");
}

InferResult infer(const DecisionGraph& g, std::span<const double> x) {
  if (static_cast<int>(x.size()) != g.n_features)
    throw DataError("feature dimension mismatch: expected " +
                    std::to_string(g.n_features) + ", got " +
                    std::to_string(x.size()));
  InferResult result;
  int id = g.root;
  result.path.push_back(id);
  std::size_t guard = g.nodes.size();
  while (!g.nodes[id].is_leaf()) {
    if (result.path.size() > guard)
      throw ModelError("CycleError: inference exceeded node count");
    const GraphNode& node = g.nodes[id];
    id = x[node.feature] < node.threshold ? node.left : node.right;
    result.path.push_back(id);
  }
  result.label = g.nodes[id].label;
  return result;
}

int predict(const DecisionGraph& g, std::span<const double> x) {
  int id = g.root;
  while (!g.nodes[id].is_leaf()) {
    const GraphNode& node = g.nodes[id];
    id = x[node.feature] < node.threshold ? node.left : node.right;
  }
  return g.nodes[id].label;
}

std::vector<int> predict_all(const DecisionGraph& g, const Dataset& ds) {
  if (ds.n_features != g.n_features)
    throw DataError("feature dimension mismatch between graph and dataset");
  std::vector<int> out(ds.n_rows());
  for (int i = 0; i < ds.n_rows(); ++i) out[i] = predict(g, ds.row(i));
  return out;
}

std::vector<int> infer_from(const DecisionGraph& g, int start,
                            const Dataset& ds, std::span<const int> rows) {
  check_ref(g, start, "inference start");
  std::vector<int> out;
  out.reserve(rows.size());
  for (int r : rows) {
    int id = start;
    while (!g.nodes[id].is_leaf()) {
      const GraphNode& node = g.nodes[id];
      id = ds.at(r, node.feature) < node.threshold ? node.left : node.right;
    }
    out.push_back(g.nodes[id].label);
  }
  return out;
}

RoutingTable routing_table(const DecisionGraph& g, const Dataset& ds) {
  if (ds.n_features != g.n_features)
    throw DataError("feature dimension mismatch between graph and dataset");
  RoutingTable table;
  table.visitors.resize(g.nodes.size());
  for (int r = 0; r < ds.n_rows(); ++r) {
    int id = g.root;
    table.visitors[id].push_back(r);
    while (!g.nodes[id].is_leaf()) {
      const GraphNode& node = g.nodes[id];
      id = ds.at(r, node.feature) < node.threshold ? node.left : node.right;
      table.visitors[id].push_back(r);
    }
  }
  return table;
}

std::vector<int> breadth_first_order(const DecisionGraph& g) {
  std::vector<int> level = bfs_levels(g);
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(level.size()); ++i)
    if (level[i] >= 0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return level[a] < level[b]; });
  return order;
}

int split_count(const DecisionGraph& g) {
  int n = 0;
  for (const auto& node : g.nodes) n += node.is_leaf() ? 0 : 1;
  return n;
}

int leaf_count(const DecisionGraph& g) {
  int n = 0;
  for (const auto& node : g.nodes) n += node.is_leaf() ? 1 : 0;
  return n;
}

PathLengthStats avg_path_length(const DecisionGraph& g, const Dataset& ds) {
  if (ds.n_rows() == 0) throw DataError("empty dataset");
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < ds.n_rows(); ++r) {
    InferResult res = infer(g, ds.row(r));
    const double len = static_cast<double>(res.path.size()) - 1.0;
    sum += len;
    sumsq += len * len;
  }
  const double n = static_cast<double>(ds.n_rows());
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  return {mean, std::sqrt(var)};
}

namespace {

// Rebuilds the arena keeping only nodes reachable from root, preserving
// relative id order (so serialized layouts stay stable).
DecisionGraph compact(const DecisionGraph& g) {
  std::vector<int> level = bfs_levels(g);
  std::vector<int> remap(g.nodes.size(), -1);
  DecisionGraph out;
  out.n_features = g.n_features;
  out.n_classes = g.n_classes;
  for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
    if (level[i] < 0) continue;
    remap[i] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(g.nodes[i]);
  }
  for (auto& node : out.nodes) {
    if (node.is_leaf()) continue;
    node.left = remap[node.left];
    node.right = remap[node.right];
  }
  out.root = remap[g.root];
  return out;
}

}  // namespace

DecisionGraph drop_unreachable(const DecisionGraph& g) {
  DecisionGraph out = compact(g);
  validate(out);
  return out;
}

DecisionGraph merge_equivalent_leaves(const DecisionGraph& g) {
  std::vector<int> canonical(g.n_classes, -1);
  std::vector<int> redirect(g.nodes.size());
  for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
    redirect[i] = i;
    const GraphNode& node = g.nodes[i];
    if (!node.is_leaf()) continue;
    if (canonical[node.label] < 0)
      canonical[node.label] = i;
    else
      redirect[i] = canonical[node.label];
  }
  DecisionGraph out = g;
  for (auto& node : out.nodes) {
    if (node.is_leaf()) continue;
    node.left = redirect[node.left];
    node.right = redirect[node.right];
  }
  out.root = redirect[out.root];
  out = compact(out);
  validate(out);
  return out;
}

DecisionGraph prune_dead_nodes(const DecisionGraph& g, const Dataset& ds) {
  if (ds.n_rows() == 0) throw DataError("empty dataset");
  RoutingTable table = routing_table(g, ds);

  // Count how many visitors each internal node sends left.
  std::vector<std::int64_t> to_left(g.nodes.size(), 0);
  for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
    const GraphNode& node = g.nodes[id];
    if (node.is_leaf()) continue;
    for (int r : table.visitors[id])
      if (ds.at(r, node.feature) < node.threshold) ++to_left[id];
  }

  // A visited one-sided internal node is bypassed toward its live child,
  // chasing chains of bypasses.
  std::vector<int> resolved(g.nodes.size(), -2);
  std::function<int(int)> resolve = [&](int id) -> int {
    if (resolved[id] != -2) return resolved[id];
    const GraphNode& node = g.nodes[id];
    int target = id;
    if (!node.is_leaf() && !table.visitors[id].empty()) {
      const std::int64_t visits =
          static_cast<std::int64_t>(table.visitors[id].size());
      if (to_left[id] == 0)
        target = resolve(node.right);
      else if (to_left[id] == visits)
        target = resolve(node.left);
    }
    resolved[id] = target;
    return target;
  };

  DecisionGraph out = g;
  out.root = resolve(out.root);
  for (auto& node : out.nodes) {
    if (node.is_leaf()) continue;
    node.left = resolve(node.left);
    node.right = resolve(node.right);
  }
  out = compact(out);
  validate(out);
  return out;
}

namespace {

// Dominant-class fills; index = class % 10. "Mixed" nodes (no class above
// 50% of visitors, or no data given) render in blue.
constexpr const char* kClassPalette[10] = {
    "#e6194b", "#3cb44b", "#ffe119", "#f58231", "#911eb4",
    "#f032e6", "#9a6324", "#fabebe", "#808000", "#008080"};
constexpr const char* kMixedColor = "#4363d8";

std::string format_threshold(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string to_dot(const DecisionGraph& g, const Dataset* ds) {
  std::vector<int> dominant(g.nodes.size(), -1);
  if (ds != nullptr) {
    RoutingTable table = routing_table(g, *ds);
    for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
      const auto& rows = table.visitors[id];
      if (rows.empty()) continue;
      std::vector<int> counts(g.n_classes, 0);
      for (int r : rows) ++counts[ds->labels[r]];
      for (int c = 0; c < g.n_classes; ++c)
        if (2 * counts[c] > static_cast<int>(rows.size())) dominant[id] = c;
    }
  }
  std::ostringstream os;
  os << "digraph decision_graph {\n";
  os << "  node [shape=box, style=\"filled,rounded\", fontname=\"Helvetica\"];\n";
  for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
    const GraphNode& node = g.nodes[id];
    const char* fill =
        dominant[id] >= 0 ? kClassPalette[dominant[id] % 10] : kMixedColor;
    if (node.is_leaf()) {
      os << "  n" << id << " [label=\"class " << node.label
         << "\", shape=ellipse, fillcolor=\"" << fill << "\"];\n";
    } else {
      os << "  n" << id << " [label=\"f" << node.feature << " < "
         << format_threshold(node.threshold) << "\", fillcolor=\"" << fill
         << "\"];\n";
    }
  }
  for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
    const GraphNode& node = g.nodes[id];
    if (node.is_leaf()) continue;
    os << "  n" << id << " -> n" << node.left << " [label=\"<\"];\n";
    os << "  n" << id << " -> n" << node.right << " [label=\">=\"];\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_json(const DecisionGraph& g) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["n_features"] = g.n_features;
  doc["n_classes"] = g.n_classes;
  doc["root"] = g.root;
  nlohmann::json nodes = nlohmann::json::array();
  for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
    const GraphNode& node = g.nodes[id];
    nlohmann::json jn;
    jn["id"] = id;
    if (node.is_leaf()) {
      jn["kind"] = "leaf";
      jn["class"] = node.label;
    } else {
      jn["kind"] = "internal";
      jn["feature"] = node.feature;
      jn["threshold"] = node.threshold;
      jn["left"] = node.left;
      jn["right"] = node.right;
    }
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

DecisionGraph from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model JSON parse error: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != 1)
      throw ModelError("unsupported model schema version");
    DecisionGraph g;
    g.n_features = doc.at("n_features").get<int>();
    g.n_classes = doc.at("n_classes").get<int>();
    g.root = doc.at("root").get<int>();
    const auto& nodes = doc.at("nodes");
    if (!nodes.is_array()) throw ModelError("nodes must be an array");
    g.nodes.resize(nodes.size());
    std::vector<char> assigned(nodes.size(), 0);
    for (const auto& jn : nodes) {
      const int id = jn.at("id").get<int>();
      if (id < 0 || id >= static_cast<int>(g.nodes.size()) || assigned[id])
        throw ModelError("node ids must be unique and dense in [0, n)");
      assigned[id] = 1;
      GraphNode node;
      const std::string kind = jn.at("kind").get<std::string>();
      if (kind == "leaf") {
        node.label = jn.at("class").get<int>();
      } else if (kind == "internal") {
        node.feature = jn.at("feature").get<int>();
        node.threshold = jn.at("threshold").get<double>();
        node.left = jn.at("left").get<int>();
        node.right = jn.at("right").get<int>();
        if (node.feature < 0) throw ModelError("negative feature index");
      } else {
        throw ModelError("unknown node kind '" + kind + "'");
      }
      g.nodes[id] = node;
    }
    for (char a : assigned)
      if (!a) throw ModelError("node ids must be unique and dense in [0, n)");
    validate(g);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model JSON schema violation: ") + e.what());
  }
}

DecisionGraph tree_to_graph(const Tree& tree) {
  if (tree.empty()) throw ModelError("cannot convert an empty tree");
  DecisionGraph g;
  g.n_features = tree.n_features;
  g.n_classes = tree.n_classes;
  g.nodes.reserve(tree.nodes.size());
  // Tree arenas are already preorder from the root; copy node-for-node.
  std::function<int(int)> copy = [&](int id) -> int {
    const TreeNode& src = tree.nodes[id];
    const int out_id = static_cast<int>(g.nodes.size());
    g.nodes.emplace_back();
    if (src.is_leaf()) {
      g.nodes[out_id].label = src.label;
    } else {
      g.nodes[out_id].feature = src.feature;
      g.nodes[out_id].threshold = src.threshold;
      const int l = copy(src.left);
      g.nodes[out_id].left = l;
      const int r = copy(src.right);
      g.nodes[out_id].right = r;
    }
    return out_id;
  };
  g.root = copy(tree.root);
  validate(g);
  return g;
}

}  // namespace tnt
