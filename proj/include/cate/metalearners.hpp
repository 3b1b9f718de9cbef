#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cate/causal_forest.hpp"
#include "cate/dataset.hpp"
#include "cate/nuisance.hpp"
#include "cate/stacking.hpp"

namespace cate {

enum class Method { S, T, X, DR, R, IPW, CF };

std::string method_name(Method m);  // "S", "T", "X", "DR", "R", "IPW", "CF"
/// Case-insensitive.
std::optional<Method> parse_method(const std::string& name);
const std::vector<Method>& all_methods();

/// Pseudo-outcome for a two-step learner. weights is empty except for the
/// R-learner, whose second stage is a regression with weights (D - e)^2.
struct PseudoOutcome {
  Vector psi;
  Vector weights;
  Method method = Method::DR;
};

struct CateEstimate {
  Vector tau_hat;
  std::string method;
  std::optional<Vector> lower;
  std::optional<Vector> upper;
  std::uint64_t seed = 0;
  std::string fingerprint;         // FNV-1a of the canonical configuration JSON
  std::vector<std::string> notes;  // warnings raised while estimating
};

enum class SecondStage { CrossFit, InSample };

struct MetaConfig {
  StackSpec e_spec;
  StackSpec mu_spec;
  StackSpec t_spec;  // second-stage regression
  int folds = 5;
  double clip_epsilon = 0.01;
  SecondStage second_stage = SecondStage::CrossFit;
  CausalForestParams forest;
  std::uint64_t seed = 0;
};

PseudoOutcome dr_pseudo(const Dataset& data, const NuisanceEstimates& nuis);
PseudoOutcome r_pseudo(const Dataset& data, const NuisanceEstimates& nuis);
PseudoOutcome ipw_pseudo(const Dataset& data, const NuisanceEstimates& nuis);

/// Fitted second stage. Cross-fitting keeps one model per (half, subfold);
/// new points are predicted by averaging every model.
struct SecondStageFit {
  std::vector<StackedModel> models;
  Vector in_sample;              // out-of-half prediction for each training row
  std::vector<int> half;         // 0/1 half of each row (cross-fit only)
  std::vector<int> n_averaged;   // predictions averaged into in_sample[i]
  std::vector<std::string> notes;

  Vector predict(const Matrix& x) const;
};

/// Random halves A and B; A is cut into 5 subfolds, a model is trained on each
/// subfold and predicts B, the 5 predictions are averaged, and the roles swap.
/// With n < 20 this falls back to an in-sample fit and records a note.
SecondStageFit second_stage_crossfit(const PseudoOutcome& pseudo, const Matrix& x,
                                     const StackSpec& t_spec, std::uint64_t seed);
/// One model on all rows, predicting its own training rows.
SecondStageFit in_sample_second_stage(const PseudoOutcome& pseudo, const Matrix& x,
                                      const StackSpec& t_spec);

/// mu(x, 1) - mu(x, 0) from a single model on (X, D), fitted per fold on S_a.
Vector s_learner(const Dataset& data, const FoldPlan& plan, const StackSpec& mu_spec);
Vector t_learner(const NuisanceEstimates& nuis);
Vector t_learner(const Dataset& data, const FoldPlan& plan, const StackSpec& mu_spec);
/// Imputed effects regressed within each arm and blended with e_hat.
Vector x_learner(const Dataset& data, const NuisanceEstimates& nuis, const StackSpec& t_spec);

/// Nuisances each method needs.
NuisanceOptions nuisance_needs(Method m, double clip_epsilon);

/// Runs one method end to end. `nuis` may carry precomputed cross-fitted
/// nuisances for `plan`; otherwise they are estimated here.
CateEstimate estimate(Method m, const Dataset& data, const FoldPlan& plan, const MetaConfig& config,
                      const NuisanceEstimates* nuis = nullptr);

/// Fit on `train`, predict CATE at `x_new`. Used by the bootstrap.
using FitPredict = std::function<Vector(const Dataset& train, const Matrix& x_new, std::uint64_t seed)>;
FitPredict make_fit_predict(Method m, const MetaConfig& config);

/// Canonical configuration string and its 64-bit FNV-1a hash in hex.
std::string config_fingerprint(Method m, const MetaConfig& config);

}  // namespace cate
