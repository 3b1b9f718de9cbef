#include "cate/stacking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cate/error.hpp"

namespace cate {
namespace {

void require_finite(const Matrix& z, const Vector& y) {
  if (z.rows() != y.size()) throw ArgumentError("design and target have different row counts");
  if (z.rows() < 1 || z.cols() < 1) throw ArgumentError("least squares needs n >= 1 and m >= 1");
  if (!z.allFinite() || !y.allFinite()) throw DataError("non-finite input to least squares");
}

Matrix columns(const Matrix& z, const std::vector<int>& set) {
  Matrix out(z.rows(), static_cast<Eigen::Index>(set.size()));
  for (std::size_t k = 0; k < set.size(); ++k) out.col(k) = z.col(set[k]);
  return out;
}

// Unconstrained least squares on the passive set.
Vector passive_solve(const Matrix& z, const Vector& y, const std::vector<int>& passive) {
  Vector s = Vector::Zero(z.cols());
  if (passive.empty()) return s;
  Vector sp = columns(z, passive).colPivHouseholderQr().solve(y);
  for (std::size_t k = 0; k < passive.size(); ++k) s[passive[k]] = sp[k];
  return s;
}

// Least squares on the passive set with the coefficients summing to one.
Vector passive_solve_simplex(const Matrix& gram, const Vector& zty, const std::vector<int>& passive,
                             Eigen::Index m) {
  const auto k = static_cast<Eigen::Index>(passive.size());
  Matrix kkt = Matrix::Zero(k + 1, k + 1);
  Vector rhs(k + 1);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = gram(passive[a], passive[b]);
    kkt(a, k) = kkt(k, a) = 1.0;
    rhs[a] = zty[passive[a]];
  }
  rhs[k] = 1.0;
  Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  Vector s = Vector::Zero(m);
  for (Eigen::Index a = 0; a < k; ++a) s[passive[a]] = sol[a];
  return s;
}

bool contains(const std::vector<int>& set, int j) {
  return std::find(set.begin(), set.end(), j) != set.end();
}

// Shared Lawson-Hanson loop. `violation(grad, passive, j)` measures how much
// moving column j into the passive set would reduce the residual, where grad is
// z'(y - z x); `solve(passive)` returns the subproblem optimum on the passive set.
template <typename Violation, typename Solve>
Vector active_set(const Matrix& z, const Vector& y, Vector x, std::vector<int> passive,
                  Violation violation, Solve solve) {
  const auto m = static_cast<int>(z.cols());
  const double tol = 1e-12 * std::max(1.0, z.norm() * std::max(1.0, y.norm()));
  for (int outer = 0; outer < 3 * m + 10; ++outer) {
    Vector grad = z.transpose() * (y - z * x);
    int best = -1;
    double best_v = tol;
    for (int j = 0; j < m; ++j) {
      if (contains(passive, j)) continue;
      double v = violation(grad, passive, j);
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    if (best < 0) break;
    passive.push_back(best);
    std::sort(passive.begin(), passive.end());

    for (int inner = 0; inner < 3 * m + 10 && !passive.empty(); ++inner) {
      Vector s = solve(passive);
      bool feasible = true;
      for (int j : passive) feasible = feasible && s[j] > 0;
      if (feasible) {
        x = s;
        break;
      }
      // Step from x toward s until the first passive coefficient reaches zero.
      double alpha = 1.0;
      for (int j : passive) {
        if (s[j] <= 0) alpha = std::min(alpha, x[j] / (x[j] - s[j]));
      }
      x += alpha * (s - x);
      std::vector<int> kept;
      for (int j : passive) {
        if (x[j] > tol) {
          kept.push_back(j);
        } else {
          x[j] = 0.0;
        }
      }
      passive = std::move(kept);
    }
  }
  return x.cwiseMax(0.0);
}

}  // namespace

Vector nnls(const Matrix& z, const Vector& y) {
  require_finite(z, y);
  return active_set(
      z, y, Vector::Zero(z.cols()), {},
      [](const Vector& grad, const std::vector<int>&, int j) { return grad[j]; },
      [&](const std::vector<int>& passive) { return passive_solve(z, y, passive); });
}

Vector convex_least_squares(const Matrix& z, const Vector& y) {
  require_finite(z, y);
  const Eigen::Index m = z.cols();

  std::vector<int> group(static_cast<std::size_t>(m), -1);
  std::vector<int> reps;
  for (int j = 0; j < m; ++j) {
    for (std::size_t r = 0; r < reps.size(); ++r) {
      if (z.col(j) == z.col(reps[r])) {
        group[j] = static_cast<int>(r);
        break;
      }
    }
    if (group[j] < 0) {
      group[j] = static_cast<int>(reps.size());
      reps.push_back(j);
    }
  }
  Matrix zr = columns(z, reps);
  const auto mr = zr.cols();
  Matrix gram = zr.transpose() * zr;
  Vector zty = zr.transpose() * y;

  int start = 0;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int j = 0; j < mr; ++j) {
    double rss = (y - zr.col(j)).squaredNorm();
    if (rss < best_rss) {
      best_rss = rss;
      start = j;
    }
  }
  Vector x0 = Vector::Zero(mr);
  x0[start] = 1.0;

  // Under the sum constraint the passive coefficients share one multiplier, so
  // a column helps when its gradient exceeds the passive-set level.
  Vector xr = active_set(
      zr, y, x0, {start},
      [](const Vector& grad, const std::vector<int>& passive, int j) {
        double level = 0.0;
        for (int k : passive) level += grad[k];
        return grad[j] - level / static_cast<double>(passive.size());
      },
      [&](const std::vector<int>& passive) {
        return passive_solve_simplex(gram, zty, passive, mr);
      });
  xr /= xr.sum();

  std::vector<int> group_size(reps.size(), 0);
  for (int g : group) ++group_size[g];
  Vector out(m);
  for (int j = 0; j < m; ++j) out[j] = xr[group[j]] / group_size[group[j]];
  return out;
}

void StackSpec::validate() const {
  if (members.empty()) throw ArgumentError("stack needs at least one member");
  if (cv_folds < 2) throw ArgumentError("stack cv_folds must be >= 2");
  for (const auto& m : members) m.validate();
}

StackedModel fit_stacked(const StackSpec& spec, const Matrix& x, const Vector& y,
                         const std::optional<Vector>& weights) {
  spec.validate();
  const Eigen::Index n = x.rows();
  const auto m = static_cast<Eigen::Index>(spec.members.size());
  if (y.size() != n) throw ArgumentError("outcome length does not match row count");

  if (m == 1) {
    std::vector<FittedModel> fitted{fit(spec.members.front(), x, y, weights)};
    return StackedModel(std::move(fitted), Vector::Ones(1),
                        Vector::Constant(1, std::numeric_limits<double>::quiet_NaN()),
                        std::numeric_limits<double>::quiet_NaN(), Matrix());
  }
  if (n < spec.cv_folds) {
    throw ArgumentError("stack needs at least cv_folds rows (n=" + std::to_string(n) + ")");
  }

  Vector w = weights ? *weights : Vector::Ones(n);
  if (w.size() != n) throw ArgumentError("weight vector length does not match row count");
  FoldPlan plan = make_folds(n, spec.cv_folds, spec.seed);
  Matrix z(n, m);
  for (int fold = 1; fold <= plan.k; ++fold) {
    TrainEstimateSplit split = split_for_fold(plan, fold);
    Matrix x_train = select_rows(x, split.train);
    Vector y_train = select(y, split.train);
    std::optional<Vector> w_train;
    if (weights) w_train = select(w, split.train);
    Matrix x_held = select_rows(x, split.estimate);
    for (Eigen::Index j = 0; j < m; ++j) {
      FittedModel model = fit(spec.members[j], x_train, y_train, w_train);
      Vector pred = model.predict(x_held);
      for (std::size_t r = 0; r < split.estimate.size(); ++r) z(split.estimate[r], j) = pred[r];
    }
  }

  // Weighted problem solved on sqrt(w)-scaled rows.
  Vector sqrt_w = w.cwiseSqrt();
  Matrix zw = z.array().colwise() * sqrt_w.array();
  Vector yw = y.cwiseProduct(sqrt_w);
  Vector beta = convex_least_squares(zw, yw);

  const double w_total = w.sum();
  Vector cv_risk(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    cv_risk[j] = (w.array() * (y - z.col(j)).array().square()).sum() / w_total;
  }
  double stack_risk = (w.array() * (y - z * beta).array().square()).sum() / w_total;

  std::vector<FittedModel> fitted;
  fitted.reserve(static_cast<std::size_t>(m));
  for (const auto& member : spec.members) fitted.push_back(fit(member, x, y, weights));
  return StackedModel(std::move(fitted), std::move(beta), std::move(cv_risk), stack_risk,
                      std::move(z));
}

std::vector<Vector> StackedModel::member_predictions(const Matrix& x) const {
  std::vector<Vector> out;
  for (const auto& mdl : members_) out.push_back(mdl.predict(x));
  return out;
}

Vector StackedModel::predict(const Matrix& x) const {
  Vector acc = Vector::Zero(x.rows());
  for (std::size_t j = 0; j < members_.size(); ++j) {
    if (weights_[j] != 0.0) acc += weights_[j] * members_[j].predict(x);
  }
  return acc;
}

Vector StackedModel::predict_probability(const Matrix& x) const {
  return predict(x).cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace cate
