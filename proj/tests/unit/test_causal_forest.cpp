#include <gtest/gtest.h>

#include <cmath>

#include "cate/causal_forest.hpp"
#include "cate/error.hpp"
#include "cate/simulation.hpp"
#include "helpers.hpp"

namespace cate {
namespace {

struct ForestFixture {
  SimulatedDataset sim;
  NuisanceEstimates nuis;
};

ForestFixture make_fixture(std::uint64_t seed, Eigen::Index n = 300) {
  DgpConfig dgp;
  dgp.n = n;
  dgp.p = 5;
  dgp.seed = seed;
  ForestFixture f{gen_dgp(dgp), {}};
  FoldPlan plan = make_folds(n, 5, seed);
  auto stack = StackSpec::single(LearnerSpec::ridge());
  f.nuis = crossfit_nuisances(f.sim.data, plan, stack, stack);
  return f;
}

TEST(LeafTau, ZeroDenominatorIsEmpty) {
  std::vector<double> y{1, 2}, d{0, 0};
  EXPECT_FALSE(leaf_tau(y, d).has_value());
  std::vector<double> d2{1, -1};
  EXPECT_DOUBLE_EQ(*leaf_tau(y, d2), -0.5);
}

TEST(LocalCenter, Residuals) {
  auto f = make_fixture(1, 100);
  auto c = local_center(f.sim.data, f.nuis);
  EXPECT_LT((c.y_res - (f.sim.data.y - f.nuis.mu_hat)).norm(), 1e-15);
  EXPECT_LT((c.d_res - (f.sim.data.d_as_double() - f.nuis.e_hat)).norm(), 1e-15);
  NuisanceEstimates bad = f.nuis;
  bad.mu_hat[0] = std::nan("");
  EXPECT_THROW(local_center(f.sim.data, bad), EstimationError);
}

TEST(CausalTree, HonestSplitsIgnoreEstimateOutcomes) {
  auto f = make_fixture(2);
  auto c = local_center(f.sim.data, f.nuis);
  IndexList split_rows, est_rows;
  for (Eigen::Index i = 0; i < f.sim.data.n(); ++i) (i % 2 ? est_rows : split_rows).push_back(i);
  CausalForestParams params;
  params.mtry_fraction = 0.6;
  Engine r1 = make_engine(5), r2 = make_engine(5);
  auto a = fit_causal_tree(f.sim.data.x, c, f.sim.data.d, split_rows, est_rows, params, r1);
  CenteredData scrambled = c;
  Engine perm = make_engine(6);
  IndexList shuffled = est_rows;
  shuffle(shuffled, perm);
  for (std::size_t k = 0; k < est_rows.size(); ++k) scrambled.y_res[est_rows[k]] = c.y_res[shuffled[k]] + 3.0;
  auto b = fit_causal_tree(f.sim.data.x, scrambled, f.sim.data.d, split_rows, est_rows, params, r2);
  ASSERT_EQ(a.nodes.size(), b.nodes.size());
  for (std::size_t k = 0; k < a.nodes.size(); ++k) {
    EXPECT_EQ(a.nodes[k].feature, b.nodes[k].feature);
    EXPECT_EQ(a.nodes[k].threshold, b.nodes[k].threshold);
  }
}

TEST(CausalTree, HonestStatsAndFallback) {
  auto f = make_fixture(3);
  auto c = local_center(f.sim.data, f.nuis);
  IndexList split_rows, est_rows;
  for (Eigen::Index i = 0; i < f.sim.data.n(); ++i) (i % 2 ? est_rows : split_rows).push_back(i);
  CausalForestParams params;
  params.min_node_size = 3;
  Engine rng = make_engine(7);
  auto t = fit_causal_tree(f.sim.data.x, c, f.sim.data.d, split_rows, est_rows, params, rng);
  EXPECT_EQ(t.honest.front().count, static_cast<double>(est_rows.size()));
  for (std::size_t k = 0; k < t.nodes.size(); ++k) {
    const int e = t.effective[k];
    if (t.honest[k].valid()) {
      EXPECT_EQ(e, static_cast<int>(k));
    } else if (e >= 0) {
      // An invalid node borrows the nearest valid ancestor.
      int anc = t.nodes[k].parent;
      while (anc >= 0 && !t.honest[anc].valid()) anc = t.nodes[anc].parent;
      EXPECT_EQ(e, anc);
    }
    if (!t.nodes[k].is_leaf()) {
      const auto& l = t.honest[t.nodes[k].left];
      const auto& r = t.honest[t.nodes[k].right];
      EXPECT_EQ(l.count + r.count, t.honest[k].count);
      EXPECT_NEAR(l.sum_yd + r.sum_yd, t.honest[k].sum_yd, 1e-9);
    }
  }
}

TEST(CausalForest, WeightsSumToOneAndReproducePrediction) {
  auto f = make_fixture(4);
  CausalForestParams params;
  params.n_trees = 80;
  params.seed = 4;
  auto model = fit_causal_forest(f.sim.data, f.nuis, params);
  Vector pred = predict_cate(model, f.sim.data.x.topRows(20));
  const auto& c = model.centered();
  for (int i = 0; i < 20; ++i) {
    std::vector<double> pt(f.sim.data.x.cols());
    for (Eigen::Index j = 0; j < f.sim.data.x.cols(); ++j) pt[j] = f.sim.data.x(i, j);
    Vector a = forest_weights(model, pt);
    EXPECT_NEAR(a.sum(), 1.0, 1e-12);
    EXPECT_GE(a.minCoeff(), 0.0);
    double num = (a.array() * c.y_res.array() * c.d_res.array()).sum();
    double den = (a.array() * c.d_res.array().square()).sum();
    EXPECT_NEAR(num / den, pred[i], 1e-10);
  }
}

TEST(CausalForest, EstimateRowsComeFromTrainingRowsOnly) {
  auto f = make_fixture(5);
  IndexList rows;
  for (Eigen::Index i = 0; i < 150; ++i) rows.push_back(i);
  CausalForestParams params;
  params.n_trees = 20;
  auto model = fit_causal_forest(f.sim.data, f.nuis, params, rows);
  for (const auto& t : model.trees()) {
    EXPECT_EQ(t.split_rows.size() + t.estimate_rows.size(), 75u);
    for (auto i : t.estimate_rows) EXPECT_LT(i, 150);
    for (auto i : t.split_rows) EXPECT_LT(i, 150);
    for (auto i : t.split_rows) EXPECT_FALSE(std::binary_search(t.estimate_rows.begin(), t.estimate_rows.end(), i));
  }
}

TEST(CausalForest, DeterministicAndSeedSensitive) {
  auto f = make_fixture(6);
  CausalForestParams params;
  params.n_trees = 30;
  params.seed = 1;
  auto a = predict_cate(fit_causal_forest(f.sim.data, f.nuis, params), f.sim.data.x);
  auto b = predict_cate(fit_causal_forest(f.sim.data, f.nuis, params), f.sim.data.x);
  EXPECT_EQ(a, b);
  params.seed = 2;
  auto c = predict_cate(fit_causal_forest(f.sim.data, f.nuis, params), f.sim.data.x);
  EXPECT_NE(a, c);
}

TEST(CausalForest, TracksLinearEffect) {
  auto f = make_fixture(7, 1500);
  FoldPlan plan = make_folds(1500, 5, 7);
  CausalForestParams params;
  params.n_trees = 200;
  Vector tau = causal_forest_crossfit(f.sim.data, plan, f.nuis, params);
  const double corr = [&] {
    Vector a = tau.array() - tau.mean(), b = f.sim.true_cate.array() - f.sim.true_cate.mean();
    return a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
  }();
  EXPECT_GT(corr, 0.6);
}

TEST(CausalForest, JsonRoundTripPreservesPredictions) {
  auto f = make_fixture(8);
  CausalForestParams params;
  params.n_trees = 15;
  auto model = fit_causal_forest(f.sim.data, f.nuis, params);
  auto dir = testing::scratch_dir("forest_json");
  const auto path = (dir / "forest.json").string();
  save_forest_json(path, model);
  auto back = load_forest_json(path);
  EXPECT_EQ(predict_cate(model, f.sim.data.x), predict_cate(back, f.sim.data.x));
  std::ofstream(path) << "{\"format\": \"something else\"}";
  EXPECT_THROW(load_forest_json(path), DataError);
}

TEST(CausalForest, ParameterValidation) {
  CausalForestParams p;
  p.n_trees = 0;
  EXPECT_THROW(p.validate(), ArgumentError);
  p = {};
  p.subsample_fraction = 0;
  EXPECT_THROW(p.validate(), ArgumentError);
  p = {};
  p.mtry_fraction = 1.5;
  EXPECT_THROW(p.validate(), ArgumentError);
}

}  // namespace
}  // namespace cate
