#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cate/config.hpp"
#include "cate/error.hpp"
#include "cate/metalearners.hpp"
#include "cate/nuisance.hpp"
#include "cate/simulation.hpp"
#include "helpers.hpp"

namespace cate {
namespace {

StackSpec ridge_stack() { return StackSpec::single(LearnerSpec::ridge(RidgeParams{0.1})); }
StackSpec tree_stack() { return StackSpec::single(LearnerSpec::tree(TreeParams{3, 5})); }

MetaConfig fast_config() {
  MetaConfig c;
  c.e_spec = ridge_stack();
  c.mu_spec = ridge_stack();
  c.t_spec = tree_stack();
  c.forest.n_trees = 50;
  return c;
}

TEST(Nuisance, PredictionsAreOutOfFold) {
  Dataset ds = testing::toy_dataset(80, 3, 1);
  FoldPlan plan = make_folds(ds.n(), 4, 2);
  auto base = crossfit_nuisances(ds, plan, ridge_stack(), ridge_stack());
  // Perturbing a row's outcome must leave that row's own predictions unchanged.
  for (Eigen::Index i : {0, 17, 55}) {
    Dataset moved = ds;
    moved.y[i] += 100.0;
    auto other = crossfit_nuisances(moved, plan, ridge_stack(), ridge_stack());
    EXPECT_EQ(other.mu_hat[i], base.mu_hat[i]);
    EXPECT_EQ(other.mu0_hat[i], base.mu0_hat[i]);
    EXPECT_EQ(other.mu1_hat[i], base.mu1_hat[i]);
    EXPECT_EQ(other.fold_of[i], plan.assignment[i]);
  }
  EXPECT_GE(base.e_hat.minCoeff(), 0.01);
  EXPECT_LE(base.e_hat.maxCoeff(), 0.99);
  EXPECT_EQ(base.e_weights.size(), 4u);
}

TEST(Nuisance, FoldWithoutArmIsDataError) {
  Matrix x = Matrix::Zero(10, 1);
  for (int i = 0; i < 10; ++i) x(i, 0) = i;
  Vector y = Vector::LinSpaced(10, 0, 1);
  Eigen::VectorXi d = Eigen::VectorXi::Zero(10);
  d[0] = 1;
  Dataset ds = make_dataset(y, d, x);
  FoldPlan plan = make_folds(10, 2, 0);
  EXPECT_THROW(crossfit_nuisances(ds, plan, ridge_stack(), ridge_stack()), DataError);
}

TEST(Nuisance, ClipPropensity) {
  Vector e(4);
  e << 0.0, 0.005, 0.5, 1.0;
  Vector c = clip_propensity(e, 0.01);
  EXPECT_EQ(c[0], 0.01);
  EXPECT_EQ(c[1], 0.01);
  EXPECT_EQ(c[2], 0.5);
  EXPECT_EQ(c[3], 0.99);
  EXPECT_THROW(clip_propensity(e, 0.0), ArgumentError);
  EXPECT_THROW(clip_propensity(e, 0.5), ArgumentError);
}

TEST(Nuisance, OverlapReportDeciles) {
  Vector e = Vector::LinSpaced(11, 0.0, 1.0);
  auto r = overlap_report(e, 0.05);
  ASSERT_EQ(r.deciles.size(), 11u);
  for (int k = 0; k <= 10; ++k) EXPECT_NEAR(r.deciles[k], 0.1 * k, 1e-12);
  EXPECT_EQ(r.clipped_low.size(), 1u);
  EXPECT_EQ(r.clipped_high.size(), 1u);
  EXPECT_EQ(r.min, 0.0);
  EXPECT_EQ(r.max, 1.0);
}

NuisanceEstimates fixed_nuisances(Eigen::Index n, double e, double mu0, double mu1, double mu) {
  NuisanceEstimates nuis;
  nuis.e_hat = Vector::Constant(n, e);
  nuis.e_raw = nuis.e_hat;
  nuis.mu0_hat = Vector::Constant(n, mu0);
  nuis.mu1_hat = Vector::Constant(n, mu1);
  nuis.mu_hat = Vector::Constant(n, mu);
  return nuis;
}

TEST(PseudoOutcomes, HandComputedValues) {
  Vector y(2);
  y << 3.0, 1.0;
  Eigen::VectorXi d(2);
  d << 1, 0;
  Dataset ds = make_dataset(y, d, Matrix::Zero(2, 1));
  auto nuis = fixed_nuisances(2, 0.25, 0.5, 2.0, 1.5);
  auto dr = dr_pseudo(ds, nuis);
  // treated: 2 - 0.5 + (3 - 2) / 0.25 = 5.5; control: 1.5 - (1 - 0.5) / 0.75
  EXPECT_NEAR(dr.psi[0], 5.5, 1e-15);
  EXPECT_NEAR(dr.psi[1], 1.5 - 0.5 / 0.75, 1e-15);
  auto r = r_pseudo(ds, nuis);
  EXPECT_NEAR(r.psi[0], (3.0 - 1.5) / 0.75, 1e-15);
  EXPECT_NEAR(r.psi[1], (1.0 - 1.5) / -0.25, 1e-15);
  EXPECT_NEAR(r.weights[0], 0.5625, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.0625, 1e-15);
  auto ipw = ipw_pseudo(ds, nuis);
  EXPECT_NEAR(ipw.psi[0], 12.0, 1e-15);
  EXPECT_NEAR(ipw.psi[1], -1.0 / 0.75, 1e-15);
}

TEST(PseudoOutcomes, DrEqualsPlugInWhenResidualsVanish) {
  Dataset ds = testing::toy_dataset(40, 2, 3);
  NuisanceEstimates nuis = fixed_nuisances(40, 0.4, 0, 0, 0);
  for (Eigen::Index i = 0; i < 40; ++i) {
    (ds.d[i] ? nuis.mu1_hat : nuis.mu0_hat)[i] = ds.y[i];
  }
  auto dr = dr_pseudo(ds, nuis);
  EXPECT_LT((dr.psi - (nuis.mu1_hat - nuis.mu0_hat)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PseudoOutcomes, MissingNuisanceIsArgumentError) {
  Dataset ds = testing::toy_dataset(10, 2, 4);
  NuisanceEstimates nuis = fixed_nuisances(10, 0.5, 0, 0, 0);
  nuis.mu0_hat[3] = std::nan("");
  EXPECT_THROW(dr_pseudo(ds, nuis), ArgumentError);
  EXPECT_NO_THROW(ipw_pseudo(ds, nuis));
}

TEST(SecondStage, CrossFitAveragesFiveModelsPerRow) {
  Dataset ds = testing::toy_dataset(200, 3, 5);
  PseudoOutcome pseudo{ds.y, Vector(), Method::DR};
  auto fit = second_stage_crossfit(pseudo, ds.x, tree_stack(), 9);
  EXPECT_EQ(fit.models.size(), 10u);
  int half_one = 0;
  for (Eigen::Index i = 0; i < 200; ++i) {
    EXPECT_EQ(fit.n_averaged[i], 5);
    half_one += fit.half[i];
  }
  EXPECT_EQ(half_one, 100);
  EXPECT_TRUE(fit.notes.empty());
  auto again = second_stage_crossfit(pseudo, ds.x, tree_stack(), 9);
  EXPECT_EQ(fit.in_sample, again.in_sample);
}

TEST(SecondStage, CrossFitPredictionIgnoresOwnPseudoOutcome) {
  Dataset ds = testing::toy_dataset(100, 2, 6);
  PseudoOutcome pseudo{ds.y, Vector(), Method::DR};
  auto base = second_stage_crossfit(pseudo, ds.x, tree_stack(), 3);
  pseudo.psi[10] += 1000.0;
  auto moved = second_stage_crossfit(pseudo, ds.x, tree_stack(), 3);
  EXPECT_EQ(base.in_sample[10], moved.in_sample[10]);
}

TEST(SecondStage, SmallSampleFallsBackInSample) {
  Dataset ds = testing::toy_dataset(12, 2, 7);
  PseudoOutcome pseudo{ds.y, Vector(), Method::DR};
  auto fit = second_stage_crossfit(pseudo, ds.x, ridge_stack(), 1);
  EXPECT_EQ(fit.models.size(), 1u);
  ASSERT_EQ(fit.notes.size(), 1u);
  auto ins = in_sample_second_stage(pseudo, ds.x, ridge_stack());
  EXPECT_EQ(fit.in_sample, ins.in_sample);
}

TEST(MetaLearners, TLearnerIsArmMeanDifference) {
  NuisanceEstimates nuis = fixed_nuisances(5, 0.5, 1.0, 3.5, 0);
  EXPECT_EQ(t_learner(nuis), Vector::Constant(5, 2.5));
}

TEST(MetaLearners, EveryMethodRunsAndIsDeterministic) {
  DgpConfig dgp;
  dgp.n = 200;
  dgp.p = 6;
  dgp.propensity_setting = 2;
  dgp.seed = 3;
  auto sim = gen_dgp(dgp);
  FoldPlan plan = make_folds(sim.data.n(), 5, 1);
  MetaConfig cfg = fast_config();
  for (Method m : all_methods()) {
    auto a = estimate(m, sim.data, plan, cfg);
    auto b = estimate(m, sim.data, plan, cfg);
    ASSERT_EQ(a.tau_hat.size(), 200) << method_name(m);
    EXPECT_TRUE(a.tau_hat.allFinite()) << method_name(m);
    EXPECT_EQ(a.tau_hat, b.tau_hat) << method_name(m);
    EXPECT_EQ(a.method, method_name(m));
    EXPECT_EQ(a.fingerprint.size(), 16u);
  }
}

TEST(MetaLearners, FingerprintTracksConfiguration) {
  MetaConfig a = fast_config(), b = fast_config();
  b.clip_epsilon = 0.02;
  EXPECT_NE(config_fingerprint(Method::DR, a), config_fingerprint(Method::DR, b));
  EXPECT_NE(config_fingerprint(Method::DR, a), config_fingerprint(Method::R, a));
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(MetaLearners, XLearnerBlendsWithPropensity) {
  // With mu0 = mu1 = 0, the imputed effects are y (treated) and -y (control).
  Dataset ds = testing::toy_dataset(60, 2, 8);
  NuisanceEstimates nuis = fixed_nuisances(60, 1.0 - 1e-9, 0, 0, 0);
  StackSpec mean_only = StackSpec::single(LearnerSpec::ridge(RidgeParams{1e12}));
  Vector tau = x_learner(ds, nuis, mean_only);
  double control_mean = 0;
  for (auto i : ds.arm(0)) control_mean -= ds.y[i];
  control_mean /= static_cast<double>(ds.arm(0).size());
  EXPECT_NEAR(tau.mean(), control_mean, 1e-6);
}

TEST(MetaLearners, ParseMethod) {
  EXPECT_EQ(parse_method("dr"), Method::DR);
  EXPECT_EQ(parse_method("CF"), Method::CF);
  EXPECT_FALSE(parse_method("lasso").has_value());
  std::set<std::string> names;
  for (Method m : all_methods()) names.insert(method_name(m));
  EXPECT_EQ(names.size(), 7u);
}

TEST(MetaLearners, FitPredictShapes) {
  Dataset ds = testing::toy_dataset(120, 3, 9);
  Matrix probe = ds.x.topRows(7);
  for (Method m : all_methods()) {
    auto fp = make_fit_predict(m, fast_config());
    Vector out = fp(ds, probe, 4);
    EXPECT_EQ(out.size(), 7) << method_name(m);
    EXPECT_TRUE(out.allFinite()) << method_name(m);
  }
}

TEST(Config, JsonRoundTrip) {
  MetaConfig c = default_meta_config();
  c.folds = 7;
  c.second_stage = SecondStage::InSample;
  c.forest.n_trees = 123;
  Json j = meta_config_to_json(c);
  MetaConfig back = meta_config_from_json(j, MetaConfig{});
  EXPECT_EQ(meta_config_to_json(back).dump(), j.dump());
  EXPECT_THROW(learner_from_json(Json{{"kind", "svm"}}), ArgumentError);
  EXPECT_THROW(meta_config_from_json(Json{{"second_stage", "twice"}}, c), ArgumentError);
}

}  // namespace
}  // namespace cate
