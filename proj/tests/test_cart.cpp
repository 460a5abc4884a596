#include <doctest.h>

#include "support.hpp"
#include "tnt/cart.hpp"

using namespace tnt;

namespace {

std::vector<int> all_rows(const Dataset& ds) {
  std::vector<int> rows(ds.n_rows());
  for (int i = 0; i < ds.n_rows(); ++i) rows[i] = i;
  return rows;
}

Dataset tiny_1d(std::vector<double> xs, std::vector<int> ys, int k = 2) {
  Dataset ds;
  ds.n_features = 1;
  ds.n_classes = k;
  for (int c = 0; c < k; ++c) ds.class_names.push_back(std::to_string(c));
  ds.values = std::move(xs);
  ds.labels = std::move(ys);
  return ds;
}

double train_accuracy(const Tree& tree, const Dataset& ds) {
  int hits = 0;
  for (int i = 0; i < ds.n_rows(); ++i)
    if (tree_predict(tree, ds.row(i)) == ds.labels[i]) ++hits;
  return static_cast<double>(hits) / ds.n_rows();
}

}  // namespace

TEST_SUITE("cart") {

TEST_CASE("gini: closed-form values") {
  CHECK(gini(std::vector<double>{5, 0}) == doctest::Approx(0.0));
  CHECK(gini(std::vector<double>{1, 1}) == doctest::Approx(0.5));
  CHECK(gini(std::vector<double>{3, 1}) == doctest::Approx(0.375));
  CHECK_THROWS_AS(gini(std::vector<double>{0, 0}), DataError);
  CHECK_THROWS_AS(gini(std::vector<double>{-1, 2}), DataError);
}

TEST_CASE("best_split: two-point case and degenerate inputs") {
  Dataset ds = tiny_1d({0.0, 1.0}, {0, 1});
  auto cand = best_split(ds, all_rows(ds), {});
  REQUIRE(cand.has_value());
  CHECK(cand->feature == 0);
  CHECK(cand->threshold == doctest::Approx(0.5));
  CHECK(cand->gain == doctest::Approx(0.5));

  Dataset pure = tiny_1d({0.0, 1.0, 2.0}, {1, 1, 1});
  CHECK(!best_split(pure, all_rows(pure), {}).has_value());

  Dataset constant = tiny_1d({2.0, 2.0}, {0, 1});
  CHECK(!best_split(constant, all_rows(constant), {}).has_value());
}

TEST_CASE("best_split: equals exhaustive enumeration on random fixtures") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const int m = 5 + static_cast<int>(seed % 26);
    const int k = 1 + static_cast<int>(seed % 4);
    const int classes = 2 + static_cast<int>(seed % 3);
    // Quantized values on some fixtures force duplicate feature values.
    Dataset ds = testsupport::random_dataset(m, k, classes, seed,
                                             seed % 3 == 0 ? 4 : 0);
    std::vector<double> weights;
    if (seed % 2 == 1) {
      Rng rng(seed * 31 + 1);
      weights.resize(m);
      for (double& w : weights) w = 0.05 + next_unit(rng);
    }
    auto got = best_split(ds, all_rows(ds), weights);
    auto expected = testsupport::oracle_best_split(ds, all_rows(ds), weights);
    REQUIRE(got.has_value() == expected.has_value());
    if (got) {
      CHECK(got->feature == expected->feature);
      CHECK(got->threshold == doctest::Approx(expected->threshold));
      CHECK(got->gain == doctest::Approx(expected->gain).epsilon(1e-9));
    }
  }
}

TEST_CASE("best_split: deterministic tie-break to lowest feature/threshold") {
  // Two identical features: both yield the same best gain.
  Dataset ds;
  ds.n_features = 2;
  ds.n_classes = 2;
  ds.class_names = {"0", "1"};
  ds.values = {0, 0, 1, 1, 2, 2, 3, 3};
  ds.labels = {0, 0, 1, 1};
  auto cand = best_split(ds, all_rows(ds), {});
  REQUIRE(cand.has_value());
  CHECK(cand->feature == 0);
  CHECK(cand->threshold == doctest::Approx(1.5));
}

TEST_CASE("best_split: weighted and unweighted agree under equal weights") {
  Dataset ds = testsupport::random_dataset(40, 3, 3, 77);
  std::vector<double> equal(40, 0.025);
  auto a = best_split(ds, all_rows(ds), {});
  auto b = best_split(ds, all_rows(ds), equal);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->feature == b->feature);
  CHECK(a->threshold == doctest::Approx(b->threshold));
}

TEST_CASE("best_split: selected partition invariant under monotone maps") {
  Dataset ds = testsupport::random_dataset(30, 2, 2, 123);
  auto base = best_split(ds, all_rows(ds), {});
  REQUIRE(base.has_value());
  std::vector<char> base_side(ds.n_rows());
  for (int i = 0; i < ds.n_rows(); ++i)
    base_side[i] = ds.at(i, base->feature) < base->threshold;

  Dataset warped = ds;
  for (int i = 0; i < ds.n_rows(); ++i)
    for (int f = 0; f < ds.n_features; ++f)
      warped.values[i * 2 + f] = std::exp(3.0 * ds.at(i, f)) - 1.0;
  auto mapped = best_split(warped, all_rows(warped), {});
  REQUIRE(mapped.has_value());
  CHECK(mapped->feature == base->feature);
  for (int i = 0; i < ds.n_rows(); ++i)
    CHECK(static_cast<char>(warped.at(i, mapped->feature) <
                            mapped->threshold) == base_side[i]);
}

TEST_CASE("fit_cart: single-class data yields a lone leaf") {
  Dataset ds = tiny_1d({0.0, 1.0, 2.0}, {1, 1, 1});
  Tree t = fit_cart(ds, {}, DepthFirst{1});
  CHECK(t.split_count() == 0);
  CHECK(t.leaf_count() == 1);
  CHECK(tree_predict(t, std::vector<double>{5.0}) == 1);
}

TEST_CASE("fit_cart: corners task needs exactly six splits") {
  Dataset ds = make_corners_synthetic(40, {0.2, 0.8, 0.2, 0.8}, 1);
  Tree full = fit_cart(ds, {}, DepthFirst{1});
  CHECK(train_accuracy(full, ds) == doctest::Approx(1.0));
  CHECK(full.split_count() == 6);

  Tree best6 = fit_cart(ds, {}, BestFirst{6});
  CHECK(train_accuracy(best6, ds) == doctest::Approx(1.0));
  Tree best5 = fit_cart(ds, {}, BestFirst{5});
  CHECK(train_accuracy(best5, ds) < 1.0);
}

TEST_CASE("fit_cart: best-first with max_splits=1 is the best_split stump") {
  Dataset ds = testsupport::random_dataset(50, 3, 2, 5);
  Tree stump = fit_cart(ds, {}, BestFirst{1});
  auto cand = best_split(ds, all_rows(ds), {});
  REQUIRE(cand.has_value());
  CHECK(stump.split_count() == 1);
  CHECK(stump.nodes[stump.root].feature == cand->feature);
  CHECK(stump.nodes[stump.root].threshold == doctest::Approx(cand->threshold));
}

TEST_CASE("fit_cart: best-first training accuracy non-decreasing in budget") {
  Dataset ds = testsupport::random_dataset(120, 4, 3, 11);
  double prev = 0.0;
  for (int budget : {0, 1, 2, 4, 8, 16, 32}) {
    Tree t = fit_cart(ds, {}, BestFirst{budget});
    CHECK(t.split_count() <= budget);
    const double acc = train_accuracy(t, ds);
    CHECK(acc >= prev - 1e-12);
    prev = acc;
  }
}

TEST_CASE("ccp_prune: alpha extremes") {
  Dataset ds = testsupport::random_dataset(60, 3, 3, 21);
  Tree t = fit_cart(ds, {}, DepthFirst{1});
  Tree same = ccp_prune(t, 0.0);
  CHECK(same.split_count() == t.split_count());
  CHECK(testsupport::tree_objective(same, 0.0) ==
        doctest::Approx(testsupport::tree_objective(t, 0.0)));

  Tree leaf = ccp_prune(t, 1e12);
  CHECK(leaf.split_count() == 0);
  CHECK(leaf.leaf_count() == 1);
}

TEST_CASE("ccp_prune: equals exhaustive pruned-subtree oracle") {
  int nontrivial = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const int m = 12 + static_cast<int>(seed % 30);
    Dataset ds = testsupport::random_dataset(m, 2, 2 + seed % 2, seed + 500,
                                             seed % 2 ? 3 : 0);
    Tree t = testsupport::random_tree_fixture(ds, seed * 7 + 1, 6);
    REQUIRE(t.split_count() <= 6);
    if (t.split_count() > 0) ++nontrivial;
    for (double alpha : {0.0, 1e-4, 1e-3, 5e-3, 0.02, 0.1, 0.5}) {
      Tree pruned = ccp_prune(t, alpha);
      auto oracle = testsupport::oracle_ccp(t, alpha);
      const double got = testsupport::tree_objective(pruned, alpha);
      CHECK(got == doctest::Approx(oracle.objective).epsilon(1e-9));
      CHECK(pruned.split_count() == oracle.split_count);
      // Never worse than the unpruned input.
      CHECK(got <= testsupport::tree_objective(t, alpha) + 1e-12);
    }
  }
  CHECK(nontrivial > 100);  // fixtures must actually exercise pruning
}

TEST_CASE("prune_schedule: shape invariants") {
  Dataset ds = testsupport::random_dataset(80, 3, 3, 33);
  Tree t = fit_cart(ds, {}, DepthFirst{1});
  PruneSchedule schedule = prune_schedule(t);
  REQUIRE(!schedule.entries.empty());
  CHECK(schedule.entries.back().split_count == 0);
  for (std::size_t i = 1; i < schedule.entries.size(); ++i) {
    CHECK(schedule.entries[i].alpha > schedule.entries[i - 1].alpha);
    CHECK(schedule.entries[i].split_count <
          schedule.entries[i - 1].split_count);
  }
}

TEST_CASE("tree_predict: routing rules") {
  Tree t;
  t.n_features = 1;
  t.n_classes = 2;
  TreeNode root;
  root.feature = 0;
  root.threshold = 0.5;
  root.left = 1;
  root.right = 2;
  root.class_weights = {1, 1};
  TreeNode l, r;
  l.label = 0;
  l.class_weights = {1, 0};
  r.label = 1;
  r.class_weights = {0, 1};
  t.nodes = {root, l, r};
  t.root = 0;

  CHECK(tree_predict(t, std::vector<double>{0.4}) == 0);
  CHECK(tree_predict(t, std::vector<double>{0.5}) == 1);  // ties go right
  CHECK(tree_predict(t, std::vector<double>{0.6}) == 1);
  CHECK_THROWS_AS(tree_predict(t, std::vector<double>{0.1, 0.2}), DataError);

  Tree single;
  single.n_features = 3;
  single.n_classes = 4;
  TreeNode leaf;
  leaf.label = 3;
  leaf.class_weights = {0, 0, 0, 5};
  single.nodes = {leaf};
  single.root = 0;
  CHECK(tree_predict(single, std::vector<double>{1, 2, 3}) == 3);
}

TEST_CASE("fit_cart: weighted path matches duplicated-row counts") {
  // Integer weights should behave like row duplication.
  Dataset ds = tiny_1d({0.0, 1.0, 2.0, 3.0}, {0, 0, 1, 0});
  std::vector<double> weights{1, 1, 5, 1};
  Tree weighted = fit_cart(ds, weights, DepthFirst{1});

  Dataset dup = tiny_1d({0.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 3.0},
                        {0, 0, 1, 1, 1, 1, 1, 0});
  Tree duplicated = fit_cart(dup, {}, DepthFirst{1});
  CHECK(weighted.split_count() == duplicated.split_count());
  for (double x : {0.1, 0.9, 1.7, 2.2, 2.8, 3.5}) {
    CHECK(tree_predict(weighted, std::vector<double>{x}) ==
          tree_predict(duplicated, std::vector<double>{x}));
  }
}

}  // TEST_SUITE
