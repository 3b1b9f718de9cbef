#include "cate/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cate/csv.hpp"
#include "cate/error.hpp"

namespace cate {

Vector clip_propensity(const Vector& e, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw ArgumentError("clip epsilon must lie in (0, 0.5), got " + format_double(epsilon));
  }
  return e.cwiseMax(epsilon).cwiseMin(1.0 - epsilon);
}

NuisanceEstimates crossfit_nuisances(const Dataset& data, const FoldPlan& plan,
                                     const StackSpec& e_spec, const StackSpec& mu_spec,
                                     const NuisanceOptions& options) {
  const Eigen::Index n = data.n();
  if (plan.n() != n) throw ArgumentError("fold plan size does not match dataset");
  if (!(options.clip_epsilon > 0.0 && options.clip_epsilon < 0.5)) {
    throw ArgumentError("clip epsilon must lie in (0, 0.5)");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  NuisanceEstimates out;
  out.clip_epsilon = options.clip_epsilon;
  out.e_raw = Vector::Constant(n, nan);
  out.mu_hat = Vector::Constant(n, nan);
  out.mu0_hat = Vector::Constant(n, nan);
  out.mu1_hat = Vector::Constant(n, nan);
  out.fold_of.assign(static_cast<std::size_t>(n), 0);

  const Vector d = data.d_as_double();
  for (int fold = 1; fold <= plan.k; ++fold) {
    TrainEstimateSplit split = split_for_fold(plan, fold);
    IndexList train0, train1;
    for (auto i : split.train) (data.d[i] ? train1 : train0).push_back(i);
    if (train0.empty() || train1.empty()) {
      throw DataError("fold " + std::to_string(fold) +
                      ": training complement lacks a treatment arm");
    }
    Matrix x_est = select_rows(data.x, split.estimate);
    Matrix x_train = select_rows(data.x, split.train);
    auto store = [&](Vector& target, const Vector& pred) {
      for (std::size_t r = 0; r < split.estimate.size(); ++r) target[split.estimate[r]] = pred[r];
    };

    if (options.fit_propensity) {
      StackedModel e_model = fit_stacked(e_spec, x_train, select(d, split.train));
      store(out.e_raw, e_model.predict_probability(x_est));
      out.e_weights.push_back(e_model.weights());
    }
    if (options.fit_mu) {
      StackedModel mu_model = fit_stacked(mu_spec, x_train, select(data.y, split.train));
      store(out.mu_hat, mu_model.predict(x_est));
      out.mu_weights.push_back(mu_model.weights());
    }
    if (options.fit_arm_means) {
      StackedModel m0 = fit_stacked(mu_spec, select_rows(data.x, train0), select(data.y, train0));
      StackedModel m1 = fit_stacked(mu_spec, select_rows(data.x, train1), select(data.y, train1));
      store(out.mu0_hat, m0.predict(x_est));
      store(out.mu1_hat, m1.predict(x_est));
      out.mu0_weights.push_back(m0.weights());
      out.mu1_weights.push_back(m1.weights());
    }
    for (auto i : split.estimate) out.fold_of[i] = fold;
    out.training_rows.push_back(std::move(split.train));
  }
  if (options.fit_propensity) {
    out.e_hat = clip_propensity(out.e_raw, options.clip_epsilon);
  } else {
    out.e_hat = Vector::Constant(n, nan);
  }
  return out;
}

OverlapReport overlap_report(const Vector& e, double epsilon) {
  OverlapReport r;
  r.epsilon = epsilon;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (e[i] < epsilon) r.clipped_low.push_back(i);
    if (e[i] > 1.0 - epsilon) r.clipped_high.push_back(i);
  }
  if (e.size() == 0) return r;
  std::vector<double> sorted(e.data(), e.data() + e.size());
  std::sort(sorted.begin(), sorted.end());
  r.min = sorted.front();
  r.max = sorted.back();
  // Linear interpolation between order statistics.
  for (int q = 0; q <= 10; ++q) {
    double pos = q / 10.0 * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    r.deciles.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
  }
  return r;
}

void write_nuisances_csv(const std::string& path, const NuisanceEstimates& nuis) {
  CsvTable t;
  t.header = {"id", "e_hat", "mu_hat", "mu0_hat", "mu1_hat", "fold"};
  for (Eigen::Index i = 0; i < nuis.n(); ++i) {
    t.rows.push_back({std::to_string(i + 1), format_double(nuis.e_hat[i]),
                      format_double(nuis.mu_hat[i]), format_double(nuis.mu0_hat[i]),
                      format_double(nuis.mu1_hat[i]), std::to_string(nuis.fold_of[i])});
  }
  write_csv_table(path, t);
}

}  // namespace cate
