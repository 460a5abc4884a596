#include "tnt/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "tnt/errors.hpp"

namespace tnt {

namespace {

// Index-parallel loop; results must be written to per-index slots so the
// outcome is independent of scheduling order.
void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min(jobs, n);
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

LearnerConfig with_c(const LearnerConfig& learner, double c) {
  LearnerConfig out = learner;
  if (auto* t = std::get_if<TntLearner>(&out)) {
    t->cfg.C = c;
  } else if (auto* n = std::get_if<NdgLearner>(&out)) {
    n->cfg.C = c;
  } else {
    throw DataError("tune_c_for_budget applies to TnT/NDG learners only; "
                    "budget CART with best-first max_splits");
  }
  return out;
}

}  // namespace

DecisionGraph fit_base(const Dataset& ds, const LearnerConfig& learner,
                       std::span<const double> weights) {
  if (const auto* t = std::get_if<TntLearner>(&learner))
    return fit_tnt(ds, t->cfg, weights);
  if (const auto* c = std::get_if<CartLearner>(&learner)) {
    GrowMode mode = c->max_splits >= 0
                        ? GrowMode(BestFirst{c->max_splits})
                        : GrowMode(DepthFirst{c->min_leaf_size});
    std::span<const double> w =
        weights.empty() && ds.has_weights()
            ? std::span<const double>(ds.weights)
            : weights;
    Tree tree = fit_cart(ds, w, mode);
    if (c->max_splits < 0) tree = ccp_prune(tree, c->alpha);
    return tree_to_graph(tree);
  }
  const auto& n = std::get<NdgLearner>(learner);
  if (!weights.empty())
    throw DataError("NDG base learner does not support sample weights");
  return fit_ndg(ds, n.cfg);
}

BaggingModel fit_bagging_indices(const Dataset& ds,
                                 const std::vector<std::vector<int>>& sets,
                                 const LearnerConfig& learner, int jobs) {
  if (sets.empty()) throw DataError("bagging needs at least one estimator");
  BaggingModel model;
  model.n_features = ds.n_features;
  model.n_classes = ds.n_classes;
  model.estimators.resize(sets.size());
  parallel_for(static_cast<int>(sets.size()), jobs, [&](int i) {
    model.estimators[i] = fit_base(take_rows(ds, sets[i]), learner);
  });
  return model;
}

BaggingModel fit_bagging(const Dataset& ds, int n_estimators,
                         const LearnerConfig& learner, std::uint64_t seed,
                         int jobs) {
  if (n_estimators < 1)
    throw DataError("bagging needs at least one estimator");
  std::vector<std::vector<int>> sets(n_estimators);
  std::vector<std::uint64_t> seeds(n_estimators);
  for (int i = 0; i < n_estimators; ++i) {
    seeds[i] = seed + static_cast<std::uint64_t>(i);
    sets[i] = bootstrap_indices(ds.n_rows(), seeds[i]);
  }
  BaggingModel model = fit_bagging_indices(ds, sets, learner, jobs);
  model.seeds = std::move(seeds);
  return model;
}

int predict_bagging(const BaggingModel& model, std::span<const double> x) {
  std::vector<int> votes(model.n_classes, 0);
  for (const auto& est : model.estimators) ++votes[predict(est, x)];
  int best = 0;
  for (int c = 1; c < model.n_classes; ++c)
    if (votes[c] > votes[best]) best = c;
  return best;
}

std::vector<int> predict_all_bagging(const BaggingModel& model,
                                     const Dataset& ds) {
  std::vector<int> out(ds.n_rows());
  for (int i = 0; i < ds.n_rows(); ++i)
    out[i] = predict_bagging(model, ds.row(i));
  return out;
}

AdaBoostModel fit_adaboost(const Dataset& ds, int n_estimators,
                           const LearnerConfig& learner, double learning_rate,
                           std::uint64_t seed) {
  (void)seed;  // base learners are deterministic; kept for CLI provenance
  if (n_estimators < 1)
    throw DataError("adaboost needs at least one estimator");
  const int m = ds.n_rows();
  const int k = ds.n_classes;
  AdaBoostModel model;
  model.n_features = ds.n_features;
  model.n_classes = k;

  std::vector<double> w(m, 1.0 / m);
  for (int stage = 0; stage < n_estimators; ++stage) {
    DecisionGraph est = fit_base(ds, learner, w);
    std::vector<int> pred = predict_all(est, ds);
    double err = 0.0;
    for (int i = 0; i < m; ++i)
      if (pred[i] != ds.labels[i]) err += w[i];

    if (err <= 0.0) {
      model.estimators.push_back(std::move(est));
      model.alphas.push_back(std::log(1e12) + std::log(k - 1.0));
      model.stage_errors.push_back(0.0);
      break;
    }
    if (err >= 1.0 - 1.0 / k) break;  // worse than chance: discard and stop

    const double alpha =
        learning_rate * (std::log((1.0 - err) / err) + std::log(k - 1.0));
    model.estimators.push_back(std::move(est));
    model.alphas.push_back(alpha);
    model.stage_errors.push_back(err);

    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      if (pred[i] != ds.labels[i]) w[i] *= std::exp(alpha);
      total += w[i];
    }
    for (double& wi : w) wi /= total;
  }
  if (model.estimators.empty())
    throw ModelError("SAMME: first stage error >= 1 - 1/K; no usable "
                     "estimator");
  return model;
}

int predict_adaboost(const AdaBoostModel& model, std::span<const double> x) {
  std::vector<double> score(model.n_classes, 0.0);
  for (std::size_t i = 0; i < model.estimators.size(); ++i)
    score[predict(model.estimators[i], x)] += model.alphas[i];
  int best = 0;
  for (int c = 1; c < model.n_classes; ++c)
    if (score[c] > score[best]) best = c;
  return best;
}

std::vector<int> predict_all_adaboost(const AdaBoostModel& model,
                                      const Dataset& ds) {
  std::vector<int> out(ds.n_rows());
  for (int i = 0; i < ds.n_rows(); ++i)
    out[i] = predict_adaboost(model, ds.row(i));
  return out;
}

BudgetTuneResult tune_c_for_budget(const Dataset& ds, int target_splits,
                                   const LearnerConfig& learner, double c_min,
                                   double c_max, int grid_size, int jobs) {
  if (!(c_min > 0.0) || !(c_max >= c_min))
    throw DataError("need 0 < c_min <= c_max");
  if (grid_size < 1) throw DataError("grid_size must be >= 1");
  if (target_splits < 0) throw DataError("target_splits must be >= 0");

  std::vector<double> grid(grid_size);
  if (grid_size == 1) {
    grid[0] = c_min;
  } else {
    const double lo = std::log(c_min), hi = std::log(c_max);
    for (int i = 0; i < grid_size; ++i)
      grid[i] = std::exp(lo + (hi - lo) * i / (grid_size - 1));
  }

  std::vector<int> splits(grid_size, -1);
  parallel_for(grid_size, jobs, [&](int i) {
    splits[i] = split_count(fit_base(ds, with_c(learner, grid[i])));
  });

  // Scan from the largest C down so exact distance ties keep the larger C.
  int best_idx = grid_size - 1;
  for (int i = grid_size - 2; i >= 0; --i)
    if (std::abs(splits[i] - target_splits) <
        std::abs(splits[best_idx] - target_splits))
      best_idx = i;
  return {grid[best_idx], splits[best_idx]};
}

int total_split_count(const BaggingModel& model) {
  int total = 0;
  for (const auto& est : model.estimators) total += split_count(est);
  return total;
}

int total_split_count(const AdaBoostModel& model) {
  int total = 0;
  for (const auto& est : model.estimators) total += split_count(est);
  return total;
}

namespace {

nlohmann::json ensemble_header(const char* kind) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["kind"] = kind;
  return doc;
}

nlohmann::json graphs_to_json(const std::vector<DecisionGraph>& graphs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& g : graphs) arr.push_back(nlohmann::json::parse(to_json(g)));
  return arr;
}

}  // namespace

std::string to_json(const BaggingModel& model) {
  nlohmann::json doc = ensemble_header("bagging");
  doc["estimators"] = graphs_to_json(model.estimators);
  return doc.dump(2) + "\n";
}

std::string to_json(const AdaBoostModel& model) {
  nlohmann::json doc = ensemble_header("adaboost");
  doc["alphas"] = model.alphas;
  doc["estimators"] = graphs_to_json(model.estimators);
  return doc.dump(2) + "\n";
}

EnsembleModel ensemble_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("ensemble JSON parse error: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != 1)
      throw ModelError("unsupported ensemble schema version");
    const std::string kind = doc.at("kind").get<std::string>();
    std::vector<DecisionGraph> estimators;
    for (const auto& e : doc.at("estimators"))
      estimators.push_back(from_json(e.dump()));
    if (estimators.empty()) throw ModelError("ensemble with no estimators");
    for (const auto& g : estimators)
      if (g.n_features != estimators[0].n_features ||
          g.n_classes != estimators[0].n_classes)
        throw ModelError("estimators disagree on n_features/n_classes");
    if (kind == "bagging") {
      BaggingModel model;
      model.estimators = std::move(estimators);
      model.n_features = model.estimators[0].n_features;
      model.n_classes = model.estimators[0].n_classes;
      return model;
    }
    if (kind == "adaboost") {
      AdaBoostModel model;
      model.alphas = doc.at("alphas").get<std::vector<double>>();
      model.estimators = std::move(estimators);
      if (model.alphas.size() != model.estimators.size())
        throw ModelError("alphas/estimators length mismatch");
      for (double a : model.alphas)
        if (!std::isfinite(a)) throw ModelError("non-finite alpha");
      model.n_features = model.estimators[0].n_features;
      model.n_classes = model.estimators[0].n_classes;
      return model;
    }
    throw ModelError("unknown ensemble kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("ensemble JSON schema violation: ") +
                     e.what());
  }
}

}  // namespace tnt
