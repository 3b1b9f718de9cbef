#include <gtest/gtest.h>

#include <cmath>

#include "cate/error.hpp"
#include "cate/learners.hpp"
#include "cate/stacking.hpp"
#include "helpers.hpp"

namespace cate {
namespace {

using testing::random_matrix;

TEST(Tree, RecoversStepFunction) {
  Engine rng = make_engine(1);
  Matrix x = random_matrix(200, 3, rng);
  Vector y(200);
  for (int i = 0; i < 200; ++i) y[i] = x(i, 1) > 0.3 ? 2.0 : -1.0;
  auto model = fit(LearnerSpec::tree(TreeParams{2, 1}), x, y);
  EXPECT_LT((model.predict(x) - y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Tree, PredictionsStayInOutcomeRange) {
  Engine gen = make_engine(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = 20 + static_cast<Eigen::Index>(uniform_index(gen, 100));
    Matrix x = random_matrix(n, 3, gen);
    Vector y = random_matrix(n, 1, gen);
    auto model = fit(LearnerSpec::tree(TreeParams{static_cast<int>(1 + uniform_index(gen, 6)), 3}), x, y);
    Vector p = model.predict(random_matrix(50, 3, gen));
    EXPECT_GE(p.minCoeff(), y.minCoeff() - 1e-12);
    EXPECT_LE(p.maxCoeff(), y.maxCoeff() + 1e-12);
  }
}

TEST(Tree, DepthLimitAndMinNodeSize) {
  Engine rng = make_engine(3);
  Matrix x = random_matrix(300, 4, rng);
  Vector y = random_matrix(300, 1, rng);
  auto model = fit(LearnerSpec::tree(TreeParams{3, 20}), x, y);
  const auto& nodes = std::get<FittedModel::Tree>(model.state()).nodes;
  for (const auto& nd : nodes) {
    EXPECT_LE(nd.depth, 3);
    EXPECT_GE(nd.c, 20.0);
  }
}

TEST(Learners, WeightScaleInvariance) {
  Engine rng = make_engine(4);
  Matrix x = random_matrix(120, 3, rng);
  Vector y = x.col(0) + 0.5 * random_matrix(120, 1, rng);
  Vector w = (random_matrix(120, 1, rng).array().abs() + 0.1).matrix();
  for (const auto& spec : {LearnerSpec::tree(), LearnerSpec::forest(ForestParams{20, 5, 0.5}, 1),
                           LearnerSpec::boosting(BoostingParams{20, 0.1, 2, 5}), LearnerSpec::ridge()}) {
    Vector a = fit(spec, x, y, w).predict(x);
    Vector b = fit(spec, x, y, Vector(7.5 * w)).predict(x);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9) << spec.name();
  }
}

TEST(Learners, RejectsBadInput) {
  Matrix x = Matrix::Zero(10, 2);
  Vector y = Vector::Zero(10);
  EXPECT_THROW(fit(LearnerSpec::tree(TreeParams{-1, 5}), x, y), ArgumentError);
  EXPECT_THROW(fit(LearnerSpec::forest(ForestParams{0, 5, 0.5}), x, y), ArgumentError);
  EXPECT_THROW(fit(LearnerSpec::ridge(RidgeParams{-1}), x, y), ArgumentError);
  EXPECT_THROW(fit(LearnerSpec::ridge(), x, y, Vector(Vector::Zero(10))), ArgumentError);
  auto model = fit(LearnerSpec::ridge(), x, y);
  EXPECT_THROW(model.predict(Matrix::Zero(3, 5)), ArgumentError);
}

TEST(Ridge, MatchesAugmentedNormalEquations) {
  Engine rng = make_engine(5);
  const int n = 60, p = 4;
  Matrix x = random_matrix(n, p, rng);
  Vector y = x * Vector::LinSpaced(p, -1, 1) + random_matrix(n, 1, rng);
  Vector w = (random_matrix(n, 1, rng).array().abs() + 0.2).matrix();
  w *= static_cast<double>(n) / w.sum();  // already mean one
  const double lambda = 2.5;
  // Oracle: [1 X] with an unpenalized intercept.
  Matrix a(n, p + 1);
  a.col(0).setOnes();
  a.rightCols(p) = x;
  Matrix pen = Matrix::Zero(p + 1, p + 1);
  pen.diagonal().tail(p).setConstant(lambda);
  Vector beta = (a.transpose() * w.asDiagonal() * a + pen).ldlt().solve(a.transpose() * w.asDiagonal() * y);
  auto model = fit(LearnerSpec::ridge(RidgeParams{lambda}), x, y, w);
  const auto& lin = std::get<FittedModel::Linear>(model.state());
  EXPECT_NEAR(lin.intercept, beta[0], 1e-10);
  for (int j = 0; j < p; ++j) EXPECT_NEAR(lin.coef[j], beta[j + 1], 1e-10);
}

TEST(Forest, DeterministicAndAveragesTrees) {
  Engine rng = make_engine(6);
  Matrix x = random_matrix(150, 4, rng);
  Vector y = x.col(0).array().square().matrix() + 0.1 * random_matrix(150, 1, rng);
  auto spec = LearnerSpec::forest(ForestParams{30, 5, 0.5}, 17);
  auto a = fit(spec, x, y), b = fit(spec, x, y);
  EXPECT_EQ(a.predict(x), b.predict(x));
  auto cols = a.tree_predictions(x);
  ASSERT_EQ(cols.size(), 30u);
  Vector mean = Vector::Zero(150);
  for (const auto& c : cols) mean += c;
  mean /= 30.0;
  EXPECT_LT((mean - a.predict(x)).cwiseAbs().maxCoeff(), 1e-12);
  auto c = fit(LearnerSpec::forest(ForestParams{30, 5, 0.5}, 18), x, y);
  EXPECT_NE(a.predict(x), c.predict(x));
}

TEST(Boosting, TrainingLossNeverIncreases) {
  Engine rng = make_engine(7);
  Matrix x = random_matrix(200, 3, rng);
  Vector y = (x.col(0).array() * x.col(1).array()).matrix() + 0.2 * random_matrix(200, 1, rng);
  auto model = fit(LearnerSpec::boosting(BoostingParams{50, 0.1, 3, 5}), x, y);
  const auto& loss = model.training_loss();
  ASSERT_EQ(loss.size(), 51u);
  const double var = (y.array() - y.mean()).square().mean();
  EXPECT_NEAR(loss.front(), var, 1e-12);
  for (std::size_t r = 1; r < loss.size(); ++r) EXPECT_LE(loss[r], loss[r - 1] + 1e-12);
  EXPECT_LT(loss.back(), 0.5 * loss.front());
}

TEST(Learners, ProbabilityIsClamped) {
  Engine rng = make_engine(8);
  Matrix x = random_matrix(50, 1, rng);
  Vector y = 3.0 * x.col(0);
  auto model = fit(LearnerSpec::ridge(RidgeParams{0.0}), x, y);
  Vector p = model.predict_probability(random_matrix(100, 1, rng));
  EXPECT_GE(p.minCoeff(), 0.0);
  EXPECT_LE(p.maxCoeff(), 1.0);
}

// Projected gradient on min ||y - z b||^2 over the simplex; projection by sorting.
Vector project_simplex(const Vector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0, theta = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

Vector simplex_oracle(const Matrix& z, const Vector& y) {
  const Matrix g = z.transpose() * z;
  const Vector zy = z.transpose() * y;
  const double step = 1.0 / g.operatorNorm();
  Vector b = Vector::Constant(z.cols(), 1.0 / static_cast<double>(z.cols()));
  for (int it = 0; it < 500000; ++it) {
    Vector next = project_simplex(b - step * (g * b - zy));
    if ((next - b).lpNorm<Eigen::Infinity>() < 1e-16) return next;
    b = next;
  }
  return b;
}

TEST(ConvexLeastSquares, MatchesProjectedGradientOracle) {
  Engine rng = make_engine(9);
  for (int inst = 0; inst < 50; ++inst) {
    const int k = 2 + static_cast<int>(uniform_index(rng, 4));
    Matrix z = random_matrix(30, k, rng);
    Vector y = random_matrix(30, 1, rng) + 0.7 * z.col(0);
    Vector got = convex_least_squares(z, y);
    Vector want = simplex_oracle(z, y);
    const double obj_got = (y - z * got).squaredNorm(), obj_want = (y - z * want).squaredNorm();
    EXPECT_LE(obj_got, obj_want + 1e-9);
    EXPECT_LT((got - want).lpNorm<Eigen::Infinity>(), 1e-5);
    EXPECT_NEAR(got.sum(), 1.0, 1e-12);
    EXPECT_GE(got.minCoeff(), 0.0);
  }
}

TEST(ConvexLeastSquares, IdenticalColumnsShareWeight) {
  Engine rng = make_engine(10);
  Matrix z(40, 3);
  z.col(0) = random_matrix(40, 1, rng);
  z.col(1) = z.col(0);
  z.col(2) = random_matrix(40, 1, rng);
  Vector y = z.col(0);
  Vector w = convex_least_squares(z, y);
  EXPECT_NEAR(w[0], 0.5, 1e-12);
  EXPECT_NEAR(w[1], 0.5, 1e-12);
  EXPECT_NEAR(w[2], 0.0, 1e-12);
}

TEST(Nnls, KktConditionsHold) {
  Engine gen = make_engine(11);
  for (int inst = 0; inst < 100; ++inst) {
    const auto n = 5 + static_cast<Eigen::Index>(uniform_index(gen, 40));
    const auto k = 1 + static_cast<Eigen::Index>(uniform_index(gen, 6));
    Matrix z = random_matrix(n, k, gen);
    Vector y = random_matrix(n, 1, gen);
    Vector b = nnls(z, y);
    Vector grad = z.transpose() * (z * b - y);
    for (Eigen::Index j = 0; j < k; ++j) {
      EXPECT_GE(b[j], 0.0);
      if (b[j] > 0) {
        EXPECT_NEAR(grad[j], 0.0, 1e-9);
      } else {
        EXPECT_GE(grad[j], -1e-9);
      }
    }
  }
}

TEST(Nnls, NonFiniteInputIsDataError) {
  Matrix z = Matrix::Ones(3, 2);
  Vector y(3);
  y << 1, std::nan(""), 2;
  EXPECT_THROW(nnls(z, y), DataError);
}

TEST(Stacking, SingleMemberSkipsCrossValidation) {
  Engine rng = make_engine(12);
  Matrix x = random_matrix(40, 2, rng);
  Vector y = x.col(0);
  auto model = fit_stacked(StackSpec::single(LearnerSpec::ridge()), x, y);
  ASSERT_EQ(model.weights().size(), 1);
  EXPECT_EQ(model.weights()[0], 1.0);
  EXPECT_TRUE(std::isnan(model.cv_risk()[0]));
  EXPECT_LT((model.predict(x) - model.members().front().predict(x)).norm(), 1e-12);
}

TEST(Stacking, WeightsOnSimplexAndRiskNoWorseThanBest) {
  Engine gen = make_engine(13);
  for (int inst = 0; inst < 5; ++inst) {
    Matrix x = random_matrix(150, 3, gen);
    Vector y = (x.col(0).array().sin() + x.col(1).array()).matrix() + 0.3 * random_matrix(150, 1, gen);
    StackSpec spec;
    spec.members = {LearnerSpec::tree(TreeParams{3, 5}), LearnerSpec::forest(ForestParams{25, 5, 0.5}, 2),
                    LearnerSpec::ridge()};
    spec.cv_folds = 5;
    spec.seed = gen();
    auto model = fit_stacked(spec, x, y);
    EXPECT_NEAR(model.weights().sum(), 1.0, 1e-12);
    EXPECT_GE(model.weights().minCoeff(), 0.0);
    EXPECT_LE(model.stack_cv_risk(), model.cv_risk().minCoeff() + 1e-8);
    Vector combo = Vector::Zero(150);
    auto preds = model.member_predictions(x);
    for (std::size_t m = 0; m < preds.size(); ++m) combo += model.weights()[static_cast<Eigen::Index>(m)] * preds[m];
    EXPECT_LT((combo - model.predict(x)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Stacking, RejectsEmptySpec) {
  Matrix x = Matrix::Zero(20, 1);
  Vector y = Vector::Zero(20);
  EXPECT_THROW(fit_stacked(StackSpec{}, x, y), ArgumentError);
}

}  // namespace
}  // namespace cate
