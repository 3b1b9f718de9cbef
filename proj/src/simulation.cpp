#include "cate/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cate/error.hpp"
#include "cate/inference.hpp"
#include "cate/parallel.hpp"
#include "cate/rng.hpp"

namespace cate {

namespace {

enum Stream : std::uint64_t { kCovariates = 1, kPropensity = 2, kEffect = 3, kNoise = 4 };

void require_columns(const Matrix& x, Eigen::Index p, const char* what) {
  if (x.cols() < p) {
    throw ArgumentError(std::string(what) + " needs at least " + std::to_string(p) + " covariates");
  }
}

}  // namespace

void DgpConfig::validate() const {
  if (n < 50) throw ArgumentError("simulation needs n >= 50");
  if (p < 5) throw ArgumentError("simulation needs p >= 5");
  if (propensity_setting != 1 && propensity_setting != 2) {
    throw ArgumentError("propensity setting must be 1 or 2");
  }
  if (effect_setting < 1 || effect_setting > 3) throw ArgumentError("effect setting must be 1, 2 or 3");
  if (!(u_sd >= 0) || !(w_sd >= 0)) throw ArgumentError("noise SDs must be nonnegative");
}

CovariateDraw gen_covariates(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  if (p < 2) throw ArgumentError("gen_covariates needs p >= 2");
  if (n < 1) throw ArgumentError("gen_covariates needs n >= 1");
  Engine rng = make_engine(seed, kCovariates);
  Matrix a(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) a(i, j) = standard_normal(rng);
  }
  Matrix s = a * a.transpose() + static_cast<double>(p) * Matrix::Identity(p, p);
  Vector inv_sd = s.diagonal().cwiseSqrt().cwiseInverse();
  CovariateDraw out;
  out.sigma = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
  out.sigma.diagonal().setOnes();

  Eigen::LLT<Matrix> llt(out.sigma);
  if (llt.info() != Eigen::Success) throw EstimationError("covariate correlation matrix not positive definite");
  Matrix z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = standard_normal(rng);
  }
  out.x = z * llt.matrixL().transpose();
  if (p >= 5) {
    static constexpr std::array<double, 4> kLevels{-0.2, 0.0, 0.2, 0.6};
    for (Eigen::Index i = 0; i < n; ++i) out.x(i, 4) = kLevels[uniform_index(rng, kLevels.size())];
  }
  return out;
}

double mu0_fn(std::span<const double> x) {
  if (x.size() < 5) throw ArgumentError("mu0 needs at least 5 covariates");
  return x[0] * x[1] + x[2] * x[3] + x[4];
}

PropensityDraw gen_propensity(const Matrix& x, int setting, std::uint64_t seed) {
  require_columns(x, 4, "gen_propensity");
  const auto n = x.rows();
  PropensityDraw out;
  if (setting == 1) {
    out.e = Vector::Constant(n, 0.5);
  } else if (setting == 2) {
    Vector a = x.col(0).cwiseProduct(x.col(1)) + x.col(2).cwiseProduct(x.col(3));
    const double mean = a.mean();
    const double sd = std::sqrt((a.array() - mean).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0)) throw EstimationError("propensity index has zero variance");
    out.e.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      // Keep e strictly inside (0, 1) even for extreme standardized values.
      out.e[i] = std::clamp(normal_cdf((a[i] - mean) / sd), 1e-12, 1.0 - 1e-12);
    }
  } else {
    throw ArgumentError("propensity setting must be 1 or 2");
  }
  Engine rng = make_engine(seed, kPropensity);
  out.d.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.d[i] = uniform01(rng) < out.e[i] ? 1 : 0;
  return out;
}

EffectDraw gen_effect(const Matrix& x, int setting, std::uint64_t seed, double w_sd) {
  const auto n = x.rows();
  EffectDraw out{Vector(n), Vector(n)};
  Engine rng = make_engine(seed, kEffect);
  switch (setting) {
    case 1:
      require_columns(x, 5, "effect setting 1");
      for (Eigen::Index i = 0; i < n; ++i) {
        out.cate[i] = 0.6 * (x(i, 0) + x(i, 1) + x(i, 2) + x(i, 3)) + x(i, 4);
        out.tau[i] = out.cate[i] + w_sd * standard_normal(rng);
      }
      break;
    case 2:
      require_columns(x, 5, "effect setting 2");
      for (Eigen::Index i = 0; i < n; ++i) {
        out.cate[i] = std::sin(x(i, 0) + x(i, 1) / 2.0 + x(i, 2) / 3.0) + 1.5 * std::cos(x(i, 3)) + x(i, 4);
      }
      out.tau = out.cate;
      break;
    case 3:
      require_columns(x, 2, "effect setting 3");
      for (Eigen::Index i = 0; i < n; ++i) {
        out.cate[i] = x(i, 0) + (x(i, 1) > 0 ? 1.0 : 0.0);
        out.tau[i] = out.cate[i] + w_sd * standard_normal(rng);
      }
      break;
    default:
      throw ArgumentError("effect setting must be 1, 2 or 3");
  }
  return out;
}

SimulatedDataset gen_dgp(const DgpConfig& config) {
  config.validate();
  auto cov = gen_covariates(config.n, config.p, config.seed);
  auto prop = gen_propensity(cov.x, config.propensity_setting, config.seed);
  auto eff = gen_effect(cov.x, config.effect_setting, config.seed, config.w_sd);
  if (config.force_control) prop.d.setZero();

  const auto n = config.n;
  Vector mu0(n), y(n);
  Engine rng = make_engine(config.seed, kNoise);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::array<double, 5> row{cov.x(i, 0), cov.x(i, 1), cov.x(i, 2), cov.x(i, 3), cov.x(i, 4)};
    mu0[i] = mu0_fn(row);
    y[i] = eff.tau[i] * prop.d[i] + mu0[i] + config.u_sd * standard_normal(rng);
  }
  SimulatedDataset out;
  // The forced all-control debug design has a single arm, so it bypasses the
  // dataset invariants on purpose.
  if (config.force_control) {
    out.data.y = y;
    out.data.d = prop.d;
    out.data.x = cov.x;
    for (Eigen::Index j = 0; j < config.p; ++j) out.data.feature_names.push_back("x" + std::to_string(j + 1));
  } else {
    out.data = make_dataset(y, prop.d, cov.x);
  }
  out.true_tau = eff.tau;
  out.true_cate = eff.cate;
  out.true_e = prop.e;
  out.true_mu0 = mu0;
  out.sigma = cov.sigma;
  return out;
}

double evaluate_mse(const Vector& tau_hat, const Vector& truth) {
  if (tau_hat.size() != truth.size()) throw ArgumentError("evaluate_mse: length mismatch");
  if (tau_hat.size() == 0) throw ArgumentError("evaluate_mse: empty input");
  return (tau_hat - truth).squaredNorm() / static_cast<double>(tau_hat.size());
}

double evaluate_mse(const CateEstimate& cate, const Vector& truth) {
  return evaluate_mse(cate.tau_hat, truth);
}

Figure3Options default_figure3_options() {
  Figure3Options o;
  o.config.e_spec = StackSpec::single(LearnerSpec::ridge(RidgeParams{1.0}));
  o.config.mu_spec = StackSpec::single(LearnerSpec::boosting(BoostingParams{150, 0.1, 3, 10}, 1));
  o.config.t_spec = StackSpec::single(LearnerSpec::forest(ForestParams{100, 5, 1.0 / 3.0}, 2));
  return o;
}

std::vector<Figure3Pair> figure3_experiment(int replications, std::uint64_t seed,
                                            const Figure3Options& options) {
  if (replications < 10) throw ArgumentError("figure3 experiment needs at least 10 replications");
  std::vector<Figure3Pair> out(static_cast<std::size_t>(replications));
  parallel_for(out.size(), [&](std::size_t r) {
    DgpConfig dgp;
    dgp.n = options.n;
    dgp.p = options.p;
    dgp.effect_setting = 3;
    dgp.seed = derive_seed(seed, r);
    auto sim = gen_dgp(dgp);
    MetaConfig cfg = options.config;
    cfg.seed = dgp.seed;
    FoldPlan plan = make_folds(sim.data.n(), cfg.folds, dgp.seed);
    auto nuis = crossfit_nuisances(sim.data, plan, cfg.e_spec, cfg.mu_spec,
                                   nuisance_needs(Method::R, cfg.clip_epsilon));
    cfg.second_stage = SecondStage::InSample;
    double single = evaluate_mse(estimate(Method::R, sim.data, plan, cfg, &nuis), sim.true_tau);
    cfg.second_stage = SecondStage::CrossFit;
    double cross = evaluate_mse(estimate(Method::R, sim.data, plan, cfg, &nuis), sim.true_tau);
    out[r] = {single, cross};
  });
  return out;
}

}  // namespace cate
