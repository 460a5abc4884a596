#pragma once

#include <cstdint>
#include <variant>

#include "tnt/dataset.hpp"
#include "tnt/graph.hpp"
#include "tnt/ndg.hpp"
#include "tnt/tnt.hpp"

namespace tnt {

struct TntLearner {
  TnTConfig cfg;
};
struct CartLearner {
  // max_splits >= 0 selects best-first growth with that budget; otherwise
  // depth-first growth followed by ccp_prune(alpha).
  int max_splits = -1;
  double alpha = 0.0;
  int min_leaf_size = 1;
};
struct NdgLearner {
  NdgConfig cfg;
};
using LearnerConfig = std::variant<TntLearner, CartLearner, NdgLearner>;

// Trains one base estimator as a DecisionGraph; weights thread through both
// CART (weighted Gini) and TnT (weighted micro-tree fit/prune/labeling).
DecisionGraph fit_base(const Dataset& ds, const LearnerConfig& learner,
                       std::span<const double> weights = {});

struct BaggingModel {
  std::vector<DecisionGraph> estimators;
  std::vector<std::uint64_t> seeds;
  int n_features = 0;
  int n_classes = 0;
};

// Estimator i trains on bootstrap_sample(ds, seed + i).
BaggingModel fit_bagging(const Dataset& ds, int n_estimators,
                         const LearnerConfig& learner, std::uint64_t seed,
                         int jobs = 1);

// Explicit resample hook: estimator i trains on ds rows index_sets[i].
BaggingModel fit_bagging_indices(const Dataset& ds,
                                 const std::vector<std::vector<int>>& sets,
                                 const LearnerConfig& learner, int jobs = 1);

// Plurality vote, ties to the lowest class index.
int predict_bagging(const BaggingModel& model, std::span<const double> x);
std::vector<int> predict_all_bagging(const BaggingModel& model,
                                     const Dataset& ds);

struct AdaBoostModel {
  std::vector<DecisionGraph> estimators;
  std::vector<double> alphas;
  std::vector<double> stage_errors;  // weighted error per kept stage
  int n_features = 0;
  int n_classes = 0;
};

// Multi-class SAMME with the given learning rate. Stops early on a perfect
// stage (kept, alpha capped) or a stage with error >= 1 - 1/K (discarded).
AdaBoostModel fit_adaboost(const Dataset& ds, int n_estimators,
                           const LearnerConfig& learner,
                           double learning_rate = 1.0, std::uint64_t seed = 0);

// argmax_c sum_i alpha_i * [estimator_i(x) = c], ties to the lowest class.
int predict_adaboost(const AdaBoostModel& model, std::span<const double> x);
std::vector<int> predict_all_adaboost(const AdaBoostModel& model,
                                      const Dataset& ds);

struct BudgetTuneResult {
  double c = 0.0;
  int achieved_splits = 0;
};

// Trains the learner at `grid_size` log-spaced C values in [c_min, c_max]
// and returns the C whose split count lands closest to the target; ties go
// to the larger C (smaller model). Grid points may train concurrently.
BudgetTuneResult tune_c_for_budget(const Dataset& ds, int target_splits,
                                   const LearnerConfig& learner, double c_min,
                                   double c_max, int grid_size = 30,
                                   int jobs = 1);

int total_split_count(const BaggingModel& model);
int total_split_count(const AdaBoostModel& model);

// Ensemble JSON schema v1:
// {version:1, kind:"bagging"|"adaboost", alphas?, estimators:[<graph>...]}.
std::string to_json(const BaggingModel& model);
std::string to_json(const AdaBoostModel& model);
using EnsembleModel = std::variant<BaggingModel, AdaBoostModel>;
EnsembleModel ensemble_from_json(const std::string& text);

}  // namespace tnt
