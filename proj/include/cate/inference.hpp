#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cate/dataset.hpp"
#include "cate/metalearners.hpp"

namespace cate {

struct BootstrapOptions {
  int replications = 500;
  double alpha = 0.05;
  bool percentile = false;  // empirical quantiles instead of the normal interval
  std::uint64_t seed = 0;
};

struct BootstrapResult {
  Vector tau_hat;
  Vector sigma_hat;
  Vector lower;
  Vector upper;
  int replications = 0;  // replicates that completed
  int dropped = 0;       // replicates abandoned after a fitting failure
  Matrix draws;          // n x replications, held-out predictions per replicate
};

/// Per-observation bootstrap. Each replicate resamples every training set S_a
/// with replacement within treatment arm, refits, and predicts the held-out
/// fold. sigma_i is the standard deviation over replicates and the interval is
/// tau_hat_i -/+ z_{1-alpha/2} sigma_i. `tau_hat` is the full-sample estimate;
/// when empty it is computed with the same fold loop on the original data.
/// More than 10% failed replicates raises EstimationError.
BootstrapResult bootstrap_ci(const FitPredict& estimator, const Dataset& data, const FoldPlan& plan,
                             const BootstrapOptions& options, Vector tau_hat = {});

struct SortedEffect {
  int rank = 0;  // 1 = smallest effect
  Eigen::Index id = 0;
  double tau_hat = 0.0;
  double lower = 0.0;  // NaN without intervals
  double upper = 0.0;
};

/// Ascending by tau_hat, ties by observation index.
std::vector<SortedEffect> sorted_effects(const CateEstimate& cate);

/// Rows sorted ascending by tau_hat (stable).
IndexList effect_order(const Vector& tau_hat);

struct ClanRow {
  std::string covariate;
  double mean_least = 0.0;
  double mean_most = 0.0;
  double difference = 0.0;  // most - least
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double p_value = 1.0;
};

/// Covariate means in the bottom and top floor(q n) rows by tau_hat, with a
/// Welch normal interval at level gamma for the difference.
std::vector<ClanRow> clan(const Vector& tau_hat, const Dataset& data, double q = 0.2,
                          double gamma = 0.95);

struct CorrelationMatrix {
  std::vector<std::string> methods;
  Matrix rho;  // NaN where undefined
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
};

/// Pearson correlation between every pair of estimates. Pairs involving a
/// constant estimate are flagged undefined; the diagonal is always 1.
CorrelationMatrix method_correlation(const std::vector<CateEstimate>& estimates);

struct BalanceRow {
  std::string covariate;
  double mean_treated = 0.0;
  double mean_control = 0.0;
  double ipw_mean_treated = 0.0;
  double ipw_mean_control = 0.0;
  double smd_raw = 0.0;
  double smd_ipw = 0.0;
};

/// Raw and normalized inverse-propensity weighted arm means per covariate.
/// SMD divides by the unweighted pooled SD; a constant covariate gets 0.
std::vector<BalanceRow> ipw_balance(const Dataset& data, const Vector& e_hat);

struct AteSummary {
  double ate = 0.0;
  double least_mean = 0.0;  // mean tau_hat in the bottom q share
  double most_mean = 0.0;   // mean tau_hat in the top q share
  double q = 0.2;
};

AteSummary ate_summary(const Vector& tau_hat, double q = 0.2);

double normal_quantile(double p);
double normal_cdf(double z);

}  // namespace cate
