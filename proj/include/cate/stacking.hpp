#pragma once

#include <optional>
#include <vector>

#include "cate/learners.hpp"

namespace cate {

/// Lawson-Hanson active-set solution of min ||y - z b||^2 subject to b >= 0.
/// Throws DataError on non-finite input.
Vector nnls(const Matrix& z, const Vector& y);

/// min ||y - z b||^2 subject to b >= 0 and sum(b) = 1, by the same active-set
/// scheme with the equality constraint carried in the subproblem. Columns that
/// are exactly identical share their group's weight equally.
Vector convex_least_squares(const Matrix& z, const Vector& y);

struct StackSpec {
  std::vector<LearnerSpec> members;
  int cv_folds = 10;
  std::uint64_t seed = 0;

  void validate() const;
  static StackSpec single(LearnerSpec member, std::uint64_t seed = 0) {
    return StackSpec{{std::move(member)}, 10, seed};
  }
};

/// Super learner: members refit on all rows, combined with simplex weights
/// estimated from K-fold out-of-fold predictions.
class StackedModel {
 public:
  StackedModel(std::vector<FittedModel> members, Vector weights, Vector cv_risk,
               double stack_cv_risk, Matrix out_of_fold)
      : members_(std::move(members)),
        weights_(std::move(weights)),
        cv_risk_(std::move(cv_risk)),
        stack_cv_risk_(stack_cv_risk),
        out_of_fold_(std::move(out_of_fold)) {}

  Vector predict(const Matrix& x) const;
  Vector predict_probability(const Matrix& x) const;
  std::vector<Vector> member_predictions(const Matrix& x) const;

  const std::vector<FittedModel>& members() const { return members_; }
  const Vector& weights() const { return weights_; }
  /// Weighted out-of-fold MSE per member. NaN entries for a single-member
  /// stack, which skips cross-validation.
  const Vector& cv_risk() const { return cv_risk_; }
  double stack_cv_risk() const { return stack_cv_risk_; }
  const Matrix& out_of_fold() const { return out_of_fold_; }

 private:
  std::vector<FittedModel> members_;
  Vector weights_;
  Vector cv_risk_;
  double stack_cv_risk_;
  Matrix out_of_fold_;
};

StackedModel fit_stacked(const StackSpec& spec, const Matrix& x, const Vector& y,
                         const std::optional<Vector>& weights = std::nullopt);

}  // namespace cate
