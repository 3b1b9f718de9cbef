#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cate/dataset.hpp"
#include "cate/metalearners.hpp"

namespace cate {

/// Effect settings: 1 linear with noise W, 2 nonlinear, 3 the step design
/// tau = x1 + 1{x2 > 0} + W used by the cross-fitting experiment.
struct DgpConfig {
  Eigen::Index n = 2000;
  Eigen::Index p = 20;
  int propensity_setting = 1;
  int effect_setting = 1;
  double u_sd = 1.0;
  double w_sd = 0.5;
  std::uint64_t seed = 0;
  bool force_control = false;  // debug: every D set to 0

  void validate() const;
};

struct SimulatedDataset {
  Dataset data;
  Vector true_tau;   // realized effect, including W
  Vector true_cate;  // E[tau | X]
  Vector true_e;
  Vector true_mu0;
  Matrix sigma;      // covariate correlation matrix
};

struct CovariateDraw {
  Matrix x;
  Matrix sigma;
};

/// Random correlation matrix (A A' + p I with standard normal A, scaled to a
/// unit diagonal), X ~ N(0, sigma), then column 5 (when p >= 5) replaced by
/// uniform draws from {-0.2, 0, 0.2, 0.6}.
CovariateDraw gen_covariates(Eigen::Index n, Eigen::Index p, std::uint64_t seed);

/// x1 x2 + x3 x4 + x5.
double mu0_fn(std::span<const double> x_row);

struct PropensityDraw {
  Vector e;
  Eigen::VectorXi d;
};

/// Setting 1: e = 0.5. Setting 2: e = Phi((a - mean a) / sd a) with
/// a = x1 x2 + x3 x4. D ~ Bernoulli(e).
PropensityDraw gen_propensity(const Matrix& x, int setting, std::uint64_t seed);

struct EffectDraw {
  Vector tau;   // with noise
  Vector cate;  // noise-free part
};

EffectDraw gen_effect(const Matrix& x, int setting, std::uint64_t seed, double w_sd = 0.5);

SimulatedDataset gen_dgp(const DgpConfig& config);

/// Mean squared deviation of an estimate from the truth.
double evaluate_mse(const Vector& tau_hat, const Vector& truth);
double evaluate_mse(const CateEstimate& cate, const Vector& truth);

struct Figure3Options {
  MetaConfig config;  // R-learner nuisances and second stage
  Eigen::Index n = 2000;
  Eigen::Index p = 10;
};

/// Learner setup used by the cross-fitting experiment when none is given.
Figure3Options default_figure3_options();

struct Figure3Pair {
  double mse_single = 0.0;
  double mse_crossfit = 0.0;
};

/// The R-learner fitted with an in-sample and a cross-fitted second stage on
/// the same replication; MSE is measured against the realized effect.
std::vector<Figure3Pair> figure3_experiment(int replications, std::uint64_t seed,
                                            const Figure3Options& options = default_figure3_options());

}  // namespace cate
