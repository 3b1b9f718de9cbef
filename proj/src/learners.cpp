#include "cate/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cate/error.hpp"
#include "cate/rng.hpp"
#include "cate/simd/kernels.hpp"

namespace cate {

std::string kind_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::RegressionTree:
      return "regression_tree";
    case LearnerKind::RandomForest:
      return "random_forest";
    case LearnerKind::GradientBoosting:
      return "gradient_boosting";
    case LearnerKind::Ridge:
      return "ridge";
  }
  return "unknown";
}

std::string LearnerSpec::name() const { return kind_name(kind()); }

void LearnerSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("invalid learner hyperparameter: ") + what);
  };
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TreeParams>) {
          require(p.max_depth >= 0, "max_depth must be >= 0");
          require(p.min_node_size >= 1, "min_node_size must be >= 1");
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          require(p.n_trees >= 1, "n_trees must be >= 1");
          require(p.min_node_size >= 1, "min_node_size must be >= 1");
          require(p.feature_fraction > 0 && p.feature_fraction <= 1,
                  "feature_fraction must be in (0, 1]");
        } else if constexpr (std::is_same_v<P, BoostingParams>) {
          require(p.n_rounds >= 0, "n_rounds must be >= 0");
          require(p.learning_rate > 0 && p.learning_rate <= 1, "learning_rate must be in (0, 1]");
          require(p.max_depth >= 1, "max_depth must be >= 1");
          require(p.min_node_size >= 1, "min_node_size must be >= 1");
        } else {
          require(p.lambda >= 0 && std::isfinite(p.lambda), "lambda must be >= 0");
        }
      },
      params);
}

namespace {

using Tree = FittedModel::Tree;

double tree_predict_row(const Tree& t, const Matrix& x, Eigen::Index i) {
  int leaf = tree::find_leaf(t.nodes, [&](int f) { return x(i, f); });
  return t.nodes[leaf].estimate();
}

Vector tree_predict(const Tree& t, const Matrix& x) {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = tree_predict_row(t, x, i);
  return out;
}

Vector normalized_weights(const std::optional<Vector>& weights, Eigen::Index n) {
  if (!weights) return Vector::Ones(n);
  const Vector& w = *weights;
  if (w.size() != n) throw ArgumentError("weight vector length does not match row count");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0) throw ArgumentError("weights must be finite and >= 0");
  }
  double total = w.sum();
  if (!(total > 0)) throw ArgumentError("all weights are zero");
  return w * (static_cast<double>(n) / total);
}

IndexList positive_rows(const Vector& w) {
  IndexList rows;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0) rows.push_back(i);
  }
  return rows;
}

Tree fit_tree(const TreeParams& p, const Matrix& x, const Vector& y, const Vector& w) {
  const Eigen::Index n = x.rows();
  tree::RowStats stats{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    stats.c[i] = w[i] > 0 ? 1.0 : 0.0;
    stats.u[i] = w[i];
    stats.v[i] = w[i] * y[i];
  }
  tree::GrowParams gp{tree::Criterion::Regression, p.max_depth, p.min_node_size, 0};
  return Tree{tree::grow(x, tree::SortedColumns(x, positive_rows(w)), stats, gp, nullptr)};
}

FittedModel::Forest fit_forest(const ForestParams& p, std::uint64_t seed, const Matrix& x,
                               const Vector& y, const Vector& w, bool uniform) {
  const Eigen::Index n = x.rows();
  IndexList rows = positive_rows(w);
  tree::SortedColumns sorted(x, rows);

  // Rows with larger weight are drawn into the bootstrap sample more often.
  std::vector<double> cumulative(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) cumulative[i] = (acc += w[i]);
  for (auto& c : cumulative) c /= acc;

  const int p_features = static_cast<int>(x.cols());
  const int mtry =
      std::clamp(static_cast<int>(std::lround(p.feature_fraction * p_features)), 1, p_features);
  tree::GrowParams gp{tree::Criterion::Regression, -1, p.min_node_size, mtry};

  FittedModel::Forest forest;
  forest.trees.resize(static_cast<std::size_t>(p.n_trees));
  for (int b = 0; b < p.n_trees; ++b) {
    Engine rng = make_engine(seed, static_cast<std::uint64_t>(b));
    std::vector<double> count(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index draw = 0; draw < n; ++draw) {
      std::size_t i;
      if (uniform) {
        i = uniform_index(rng, static_cast<std::size_t>(n));
      } else {
        double u = uniform01(rng);
        i = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                     cumulative.begin());
        i = std::min(i, static_cast<std::size_t>(n - 1));
        while (w[i] <= 0 && i + 1 < static_cast<std::size_t>(n)) ++i;
      }
      count[i] += 1.0;
    }
    tree::RowStats stats{count, count, std::vector<double>(static_cast<std::size_t>(n))};
    std::vector<char> keep(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      stats.v[i] = count[i] * y[i];
      keep[i] = count[i] > 0;
    }
    forest.trees[b].nodes = tree::grow(x, sorted.filtered(keep), stats, gp, &rng);
  }
  return forest;
}

FittedModel::Boosting fit_boosting(const BoostingParams& p, const Matrix& x, const Vector& y,
                                   const Vector& w) {
  const Eigen::Index n = x.rows();
  const double w_total = w.sum();
  FittedModel::Boosting model;
  model.learning_rate = p.learning_rate;
  model.init = w.dot(y) / w_total;

  std::vector<double> fitted(static_cast<std::size_t>(n), model.init);
  std::vector<double> step(static_cast<std::size_t>(n));
  auto loss = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = y[i] - fitted[i];
      s += w[i] * r * r;
    }
    return s / w_total;
  };
  model.training_loss.push_back(loss());

  tree::SortedColumns sorted(x, positive_rows(w));
  tree::RowStats stats{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    stats.c[i] = w[i] > 0 ? 1.0 : 0.0;
    stats.u[i] = w[i];
  }
  tree::GrowParams gp{tree::Criterion::Regression, p.max_depth, p.min_node_size, 0};
  for (int round = 0; round < p.n_rounds; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) stats.v[i] = w[i] * (y[i] - fitted[i]);
    Tree t{tree::grow(x, sorted, stats, gp, nullptr)};
    for (Eigen::Index i = 0; i < n; ++i) step[i] = tree_predict_row(t, x, i);
    simd::axpy(p.learning_rate, step, fitted);
    model.trees.push_back(std::move(t));
    model.training_loss.push_back(loss());
  }
  return model;
}

FittedModel::Linear fit_ridge(const RidgeParams& p, const Matrix& x, const Vector& y,
                              const Vector& w) {
  // Weighted least squares with an unpenalized intercept: center by weighted
  // means, then solve (Xc' W Xc + lambda I) b = Xc' W yc.
  const double w_total = w.sum();
  Eigen::RowVectorXd x_mean = (w.transpose() * x) / w_total;
  double y_mean = w.dot(y) / w_total;
  Matrix xc = x.rowwise() - x_mean;
  Vector yc = y.array() - y_mean;
  Matrix xw = xc.array().colwise() * w.array();
  Matrix gram = xw.transpose() * xc;
  gram.diagonal().array() += p.lambda;
  Vector rhs = xw.transpose() * yc;

  FittedModel::Linear model;
  if (p.lambda > 0) {
    Eigen::LDLT<Matrix> ldlt(gram);
    model.coef = ldlt.solve(rhs);
  } else {
    model.coef = gram.completeOrthogonalDecomposition().solve(rhs);
  }
  model.intercept = y_mean - x_mean.dot(model.coef);
  return model;
}

}  // namespace

FittedModel fit(const LearnerSpec& spec, const Matrix& x, const Vector& y,
                const std::optional<Vector>& weights) {
  spec.validate();
  const Eigen::Index n = x.rows();
  if (n == 0 || x.cols() == 0) throw DataError("cannot fit a learner on empty data");
  if (y.size() != n) throw ArgumentError("outcome length does not match row count");
  if (!x.allFinite() || !y.allFinite()) throw DataError("non-finite values in learner input");
  Vector w = normalized_weights(weights, n);

  FittedModel::State state = std::visit(
      [&](const auto& p) -> FittedModel::State {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TreeParams>) {
          return fit_tree(p, x, y, w);
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          return fit_forest(p, spec.seed, x, y, w, !weights.has_value());
        } else if constexpr (std::is_same_v<P, BoostingParams>) {
          return fit_boosting(p, x, y, w);
        } else {
          return fit_ridge(p, x, y, w);
        }
      },
      spec.params);
  return FittedModel(spec, x.cols(), std::move(state));
}

Vector FittedModel::predict(const Matrix& x) const {
  if (x.cols() != p_) {
    throw ArgumentError("predict: model trained on " + std::to_string(p_) + " covariates, got " +
                        std::to_string(x.cols()));
  }
  return std::visit(
      [&](const auto& s) -> Vector {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Tree>) {
          return tree_predict(s, x);
        } else if constexpr (std::is_same_v<S, Forest>) {
          Vector acc = Vector::Zero(x.rows());
          for (const auto& t : s.trees) acc += tree_predict(t, x);
          return acc / static_cast<double>(s.trees.size());
        } else if constexpr (std::is_same_v<S, Boosting>) {
          std::vector<double> out(static_cast<std::size_t>(x.rows()), s.init);
          std::vector<double> step(out.size());
          for (const auto& t : s.trees) {
            for (Eigen::Index i = 0; i < x.rows(); ++i) step[i] = tree_predict_row(t, x, i);
            simd::axpy(s.learning_rate, step, out);
          }
          return Eigen::Map<Vector>(out.data(), x.rows());
        } else {
          return (x * s.coef).array() + s.intercept;
        }
      },
      state_);
}

Vector FittedModel::predict_probability(const Matrix& x) const {
  return predict(x).cwiseMax(0.0).cwiseMin(1.0);
}

std::vector<Vector> FittedModel::tree_predictions(const Matrix& x) const {
  const auto* forest = std::get_if<Forest>(&state_);
  if (!forest) throw ArgumentError("tree_predictions requires a random forest");
  if (x.cols() != p_) throw ArgumentError("tree_predictions: covariate count mismatch");
  std::vector<Vector> out;
  for (const auto& t : forest->trees) out.push_back(tree_predict(t, x));
  return out;
}

const std::vector<double>& FittedModel::training_loss() const {
  static const std::vector<double> empty;
  const auto* b = std::get_if<Boosting>(&state_);
  return b ? b->training_loss : empty;
}

}  // namespace cate
