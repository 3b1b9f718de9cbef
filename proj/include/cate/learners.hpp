#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cate/dataset.hpp"
#include "cate/tree.hpp"

namespace cate {

struct TreeParams {
  int max_depth = 8;
  double min_node_size = 5;
};

struct ForestParams {
  int n_trees = 1000;
  double min_node_size = 10;
  double feature_fraction = 1.0 / 3.0;  // share of covariates tried at each split
};

struct BoostingParams {
  int n_rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 3;
  double min_node_size = 5;
};

struct RidgeParams {
  double lambda = 1.0;  // on the scale of weights normalized to mean one
};

enum class LearnerKind { RegressionTree, RandomForest, GradientBoosting, Ridge };

struct LearnerSpec {
  std::variant<TreeParams, ForestParams, BoostingParams, RidgeParams> params;
  std::uint64_t seed = 0;

  LearnerKind kind() const { return static_cast<LearnerKind>(params.index()); }
  std::string name() const;
  /// Throws ArgumentError when a hyperparameter is out of range.
  void validate() const;

  static LearnerSpec tree(TreeParams p = {}, std::uint64_t seed = 0) { return {p, seed}; }
  static LearnerSpec forest(ForestParams p = {}, std::uint64_t seed = 0) { return {p, seed}; }
  static LearnerSpec boosting(BoostingParams p = {}, std::uint64_t seed = 0) { return {p, seed}; }
  static LearnerSpec ridge(RidgeParams p = {}, std::uint64_t seed = 0) { return {p, seed}; }
};

std::string kind_name(LearnerKind kind);

/// Immutable fitted state of one base learner.
class FittedModel {
 public:
  struct Tree {
    std::vector<tree::Node> nodes;
  };
  struct Forest {
    std::vector<Tree> trees;
  };
  struct Boosting {
    double init = 0.0;
    double learning_rate = 0.0;
    std::vector<Tree> trees;
    std::vector<double> training_loss;  // weighted MSE before round 1, then after each round
  };
  struct Linear {
    double intercept = 0.0;
    Vector coef;
  };
  using State = std::variant<Tree, Forest, Boosting, Linear>;

  FittedModel(LearnerSpec spec, Eigen::Index p, State state)
      : spec_(std::move(spec)), p_(p), state_(std::move(state)) {}

  const LearnerSpec& spec() const { return spec_; }
  Eigen::Index n_features() const { return p_; }
  const State& state() const { return state_; }

  /// Throws ArgumentError when x has the wrong column count.
  Vector predict(const Matrix& x) const;
  /// Predictions clamped to [0, 1].
  Vector predict_probability(const Matrix& x) const;
  /// One prediction column per tree (forests only).
  std::vector<Vector> tree_predictions(const Matrix& x) const;
  /// Per-round training loss (boosting only; empty otherwise).
  const std::vector<double>& training_loss() const;

 private:
  LearnerSpec spec_;
  Eigen::Index p_;
  State state_;
};

/// Fits `spec` by weighted squared error. Weights, when given, are nonnegative
/// and not all zero; they are rescaled to mean one, so multiplying them by a
/// constant leaves the fit unchanged.
FittedModel fit(const LearnerSpec& spec, const Matrix& x, const Vector& y,
                const std::optional<Vector>& weights = std::nullopt);

}  // namespace cate
