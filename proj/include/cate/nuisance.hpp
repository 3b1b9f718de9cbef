#pragma once

#include <string>
#include <vector>

#include "cate/dataset.hpp"
#include "cate/stacking.hpp"

namespace cate {

/// Out-of-fold nuisance predictions. fold_of[i] is the fold that held out row
/// i; every prediction for i comes from models trained on the other folds.
struct NuisanceEstimates {
  Vector e_hat;    // clipped propensity
  Vector e_raw;    // propensity before clipping
  Vector mu_hat;   // E[Y | X]
  Vector mu0_hat;  // E[Y | X, D = 0]
  Vector mu1_hat;  // E[Y | X, D = 1]
  double clip_epsilon = 0.01;
  std::vector<int> fold_of;
  /// Stack weights of the nuisance models per fold (rows: folds).
  std::vector<Vector> e_weights, mu_weights, mu0_weights, mu1_weights;
  /// training_rows[k] lists the rows used to train fold k+1's models.
  std::vector<IndexList> training_rows;

  Eigen::Index n() const { return e_hat.size(); }
};

struct NuisanceOptions {
  double clip_epsilon = 0.01;
  bool fit_mu = true;         // pooled E[Y | X]
  bool fit_arm_means = true;  // mu0, mu1
  bool fit_propensity = true;
};

/// Algorithm-box cross-fitting: for each fold, fit e and mu on S_a, mu0 and
/// mu1 on the control and treated parts of S_a, and predict S_k.
NuisanceEstimates crossfit_nuisances(const Dataset& data, const FoldPlan& plan,
                                     const StackSpec& e_spec, const StackSpec& mu_spec,
                                     const NuisanceOptions& options = {});

/// Elementwise clamp to [epsilon, 1 - epsilon]; 0 < epsilon < 0.5.
Vector clip_propensity(const Vector& e, double epsilon);

struct OverlapReport {
  double epsilon = 0.0;
  IndexList clipped_low;
  IndexList clipped_high;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> deciles;  // 0%, 10%, ..., 100%
};

OverlapReport overlap_report(const Vector& e, double epsilon);

/// Audit CSV: e_hat, mu_hat, mu0_hat, mu1_hat, fold.
void write_nuisances_csv(const std::string& path, const NuisanceEstimates& nuis);

}  // namespace cate
