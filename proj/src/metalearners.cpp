#include "cate/metalearners.hpp"

#include <algorithm>
#include <cctype>

#include "cate/config.hpp"
#include "cate/error.hpp"

namespace cate {

namespace {

constexpr std::uint64_t kSecondStageStream = 0x5EC0;

void require(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n || !v.allFinite()) {
    throw ArgumentError(std::string("nuisance ") + what + " missing or not finite");
  }
}

Matrix with_treatment(const Matrix& x, double value) {
  Matrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setConstant(value);
  return out;
}

StackSpec reseeded(StackSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  return spec;
}

StackedModel fit_pseudo(const StackSpec& spec, const PseudoOutcome& pseudo, const Matrix& x,
                        const IndexList& rows, std::uint64_t seed) {
  StackSpec s = reseeded(spec, seed);
  s.cv_folds = std::min<int>(s.cv_folds, static_cast<int>(rows.size()));
  std::optional<Vector> w;
  if (pseudo.weights.size() > 0) w = select(pseudo.weights, rows);
  return fit_stacked(s, select_rows(x, rows), select(pseudo.psi, rows), w);
}

void check_finite(const Vector& tau, const std::string& method) {
  if (!tau.allFinite()) throw EstimationError(method + ": non-finite CATE estimate");
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::S: return "S";
    case Method::T: return "T";
    case Method::X: return "X";
    case Method::DR: return "DR";
    case Method::R: return "R";
    case Method::IPW: return "IPW";
    case Method::CF: return "CF";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& name) {
  std::string upper = name;
  for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (Method m : all_methods()) {
    if (method_name(m) == upper) return m;
  }
  return std::nullopt;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::S,  Method::T,   Method::X, Method::DR,
                                           Method::R, Method::IPW, Method::CF};
  return methods;
}

PseudoOutcome dr_pseudo(const Dataset& data, const NuisanceEstimates& nuis) {
  const auto n = data.n();
  require(nuis.e_hat, n, "e_hat");
  require(nuis.mu0_hat, n, "mu0_hat");
  require(nuis.mu1_hat, n, "mu1_hat");
  PseudoOutcome out{Vector(n), Vector(), Method::DR};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = nuis.e_hat[i], m0 = nuis.mu0_hat[i], m1 = nuis.mu1_hat[i], y = data.y[i];
    const double d = data.d[i];
    out.psi[i] = m1 - m0 + d * (y - m1) / e - (1.0 - d) * (y - m0) / (1.0 - e);
  }
  return out;
}

PseudoOutcome r_pseudo(const Dataset& data, const NuisanceEstimates& nuis) {
  const auto n = data.n();
  require(nuis.e_hat, n, "e_hat");
  require(nuis.mu_hat, n, "mu_hat");
  PseudoOutcome out{Vector(n), Vector(n), Method::R};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = data.d[i] - nuis.e_hat[i];
    out.psi[i] = (data.y[i] - nuis.mu_hat[i]) / r;
    out.weights[i] = r * r;
  }
  return out;
}

PseudoOutcome ipw_pseudo(const Dataset& data, const NuisanceEstimates& nuis) {
  const auto n = data.n();
  require(nuis.e_hat, n, "e_hat");
  PseudoOutcome out{Vector(n), Vector(), Method::IPW};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = nuis.e_hat[i], d = data.d[i], y = data.y[i];
    out.psi[i] = d * y / e - (1.0 - d) * y / (1.0 - e);
  }
  return out;
}

Vector SecondStageFit::predict(const Matrix& x) const {
  if (models.empty()) throw EstimationError("second stage has no fitted model");
  Vector acc = Vector::Zero(x.rows());
  for (const auto& m : models) acc += m.predict(x);
  return acc / static_cast<double>(models.size());
}

SecondStageFit in_sample_second_stage(const PseudoOutcome& pseudo, const Matrix& x,
                                      const StackSpec& t_spec) {
  if (pseudo.psi.size() != x.rows()) throw ArgumentError("pseudo-outcome length mismatch");
  SecondStageFit fit;
  auto rows = iota_index(x.rows());
  fit.models.push_back(fit_pseudo(t_spec, pseudo, x, rows, t_spec.seed));
  fit.in_sample = fit.models.front().predict(x);
  fit.n_averaged.assign(rows.size(), 1);
  return fit;
}

SecondStageFit second_stage_crossfit(const PseudoOutcome& pseudo, const Matrix& x,
                                     const StackSpec& t_spec, std::uint64_t seed) {
  const auto n = x.rows();
  if (pseudo.psi.size() != n) throw ArgumentError("pseudo-outcome length mismatch");
  if (n < 20) {
    SecondStageFit fit = in_sample_second_stage(pseudo, x, t_spec);
    fit.notes.push_back("fewer than 20 observations: second stage fitted in sample");
    return fit;
  }
  constexpr int kSubfolds = 5;
  Engine rng = make_engine(seed, kSecondStageStream);
  IndexList perm = iota_index(n);
  shuffle(perm, rng);
  const auto half_n = static_cast<std::size_t>(n / 2);
  IndexList halves[2] = {IndexList(perm.begin(), perm.begin() + half_n),
                         IndexList(perm.begin() + half_n, perm.end())};
  for (auto& h : halves) std::sort(h.begin(), h.end());

  SecondStageFit fit;
  fit.in_sample = Vector::Zero(n);
  fit.half.assign(n, 0);
  fit.n_averaged.assign(n, 0);
  for (auto i : halves[1]) fit.half[i] = 1;
  for (int role = 0; role < 2; ++role) {
    const IndexList& train = halves[role];
    const IndexList& target = halves[1 - role];
    const Matrix x_target = select_rows(x, target);
    FoldPlan sub = make_folds(static_cast<Eigen::Index>(train.size()), kSubfolds,
                              derive_seed(seed, static_cast<std::uint64_t>(role)));
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(target.size()));
    for (int l = 1; l <= kSubfolds; ++l) {
      IndexList rows;
      for (auto j : sub.members(l)) rows.push_back(train[j]);
      auto model = fit_pseudo(t_spec, pseudo, x, rows,
                              derive_seed(seed, static_cast<std::uint64_t>(10 * role + l)));
      acc += model.predict(x_target);
      fit.models.push_back(std::move(model));
      for (auto i : target) ++fit.n_averaged[i];
    }
    acc /= static_cast<double>(kSubfolds);
    for (std::size_t j = 0; j < target.size(); ++j) fit.in_sample[target[j]] = acc[j];
  }
  return fit;
}

Vector s_learner(const Dataset& data, const FoldPlan& plan, const StackSpec& mu_spec) {
  if (plan.n() != data.n()) throw ArgumentError("fold plan does not match dataset");
  Vector tau(data.n());
  for (int k = 1; k <= plan.k; ++k) {
    auto split = split_for_fold(plan, k);
    Matrix xa(split.train.size(), data.p() + 1);
    xa.leftCols(data.p()) = select_rows(data.x, split.train);
    for (std::size_t j = 0; j < split.train.size(); ++j) {
      xa(static_cast<Eigen::Index>(j), data.p()) = data.d[split.train[j]];
    }
    auto model = fit_stacked(mu_spec, xa, select(data.y, split.train));
    Matrix xk = select_rows(data.x, split.estimate);
    Vector diff = model.predict(with_treatment(xk, 1.0)) - model.predict(with_treatment(xk, 0.0));
    for (std::size_t j = 0; j < split.estimate.size(); ++j) tau[split.estimate[j]] = diff[j];
  }
  return tau;
}

Vector t_learner(const NuisanceEstimates& nuis) {
  require(nuis.mu0_hat, nuis.n(), "mu0_hat");
  require(nuis.mu1_hat, nuis.n(), "mu1_hat");
  return nuis.mu1_hat - nuis.mu0_hat;
}

Vector t_learner(const Dataset& data, const FoldPlan& plan, const StackSpec& mu_spec) {
  NuisanceOptions opts;
  opts.fit_mu = false;
  opts.fit_propensity = false;
  return t_learner(crossfit_nuisances(data, plan, mu_spec, mu_spec, opts));
}

Vector x_learner(const Dataset& data, const NuisanceEstimates& nuis, const StackSpec& t_spec) {
  const auto n = data.n();
  require(nuis.e_hat, n, "e_hat");
  require(nuis.mu0_hat, n, "mu0_hat");
  require(nuis.mu1_hat, n, "mu1_hat");
  IndexList treated = data.arm(1), control = data.arm(0);
  Vector psi1(treated.size()), psi0(control.size());
  for (std::size_t j = 0; j < treated.size(); ++j) {
    psi1[j] = data.y[treated[j]] - nuis.mu0_hat[treated[j]];
  }
  for (std::size_t j = 0; j < control.size(); ++j) {
    psi0[j] = nuis.mu1_hat[control[j]] - data.y[control[j]];
  }
  auto cv_for = [&](std::size_t m) {
    StackSpec s = t_spec;
    s.cv_folds = std::min<int>(s.cv_folds, static_cast<int>(m));
    return s;
  };
  Vector tau1 = fit_stacked(cv_for(treated.size()), select_rows(data.x, treated), psi1).predict(data.x);
  Vector tau0 = fit_stacked(cv_for(control.size()), select_rows(data.x, control), psi0).predict(data.x);
  return nuis.e_hat.cwiseProduct(tau0) + (Vector::Ones(n) - nuis.e_hat).cwiseProduct(tau1);
}

NuisanceOptions nuisance_needs(Method m, double clip_epsilon) {
  NuisanceOptions o;
  o.clip_epsilon = clip_epsilon;
  o.fit_mu = m == Method::R || m == Method::CF;
  o.fit_arm_means = m == Method::T || m == Method::X || m == Method::DR;
  o.fit_propensity = m != Method::S && m != Method::T;
  return o;
}

namespace {

SecondStageFit run_second_stage(const PseudoOutcome& pseudo, const Matrix& x, const MetaConfig& c,
                                std::uint64_t seed) {
  return c.second_stage == SecondStage::CrossFit ? second_stage_crossfit(pseudo, x, c.t_spec, seed)
                                                 : in_sample_second_stage(pseudo, x, c.t_spec);
}

}  // namespace

CateEstimate estimate(Method m, const Dataset& data, const FoldPlan& plan, const MetaConfig& config,
                      const NuisanceEstimates* nuis_in) {
  if (plan.n() != data.n()) throw ArgumentError("fold plan does not match dataset");
  CateEstimate out;
  out.method = method_name(m);
  out.seed = config.seed;
  out.fingerprint = fnv1a_hex(config_fingerprint(m, config));

  if (m == Method::S) {
    out.tau_hat = s_learner(data, plan, config.mu_spec);
    check_finite(out.tau_hat, out.method);
    return out;
  }
  NuisanceEstimates local;
  if (nuis_in == nullptr) {
    local = crossfit_nuisances(data, plan, config.e_spec, config.mu_spec,
                               nuisance_needs(m, config.clip_epsilon));
    nuis_in = &local;
  }
  const NuisanceEstimates& nuis = *nuis_in;
  const std::uint64_t stage_seed = derive_seed(config.seed, kSecondStageStream);
  switch (m) {
    case Method::T: out.tau_hat = t_learner(nuis); break;
    case Method::X: out.tau_hat = x_learner(data, nuis, config.t_spec); break;
    case Method::DR:
    case Method::R:
    case Method::IPW: {
      PseudoOutcome pseudo = m == Method::DR ? dr_pseudo(data, nuis)
                             : m == Method::R ? r_pseudo(data, nuis)
                                              : ipw_pseudo(data, nuis);
      SecondStageFit fit = run_second_stage(pseudo, data.x, config, stage_seed);
      out.tau_hat = fit.in_sample;
      out.notes = fit.notes;
      break;
    }
    case Method::CF: out.tau_hat = causal_forest_crossfit(data, plan, nuis, config.forest); break;
    case Method::S: break;
  }
  check_finite(out.tau_hat, out.method);
  return out;
}

FitPredict make_fit_predict(Method m, const MetaConfig& config) {
  return [m, config](const Dataset& train, const Matrix& x_new, std::uint64_t seed) -> Vector {
    const Eigen::Index n = train.n();
    auto needs_arms = [&] {
      if (train.arm(0).empty() || train.arm(1).empty()) {
        throw EstimationError("training sample lacks a treatment arm");
      }
    };
    needs_arms();
    if (m == Method::S) {
      Matrix xa(n, train.p() + 1);
      xa.leftCols(train.p()) = train.x;
      xa.col(train.p()) = train.d_as_double();
      auto model = fit_stacked(reseeded(config.mu_spec, seed), xa, train.y);
      return model.predict(with_treatment(x_new, 1.0)) - model.predict(with_treatment(x_new, 0.0));
    }
    if (m == Method::T) {
      IndexList t = train.arm(1), c = train.arm(0);
      auto cv_for = [&](std::size_t size) {
        StackSpec s = reseeded(config.mu_spec, seed);
        s.cv_folds = std::min<int>(s.cv_folds, static_cast<int>(size));
        return s;
      };
      auto m1 = fit_stacked(cv_for(t.size()), select_rows(train.x, t), select(train.y, t));
      auto m0 = fit_stacked(cv_for(c.size()), select_rows(train.x, c), select(train.y, c));
      return m1.predict(x_new) - m0.predict(x_new);
    }
    FoldPlan plan = make_folds(n, std::min<int>(config.folds, static_cast<int>(n)), seed);
    NuisanceEstimates nuis = crossfit_nuisances(train, plan, config.e_spec, config.mu_spec,
                                                nuisance_needs(m, config.clip_epsilon));
    if (m == Method::X) {
      IndexList t = train.arm(1), c = train.arm(0);
      Vector psi1(t.size()), psi0(c.size());
      for (std::size_t j = 0; j < t.size(); ++j) psi1[j] = train.y[t[j]] - nuis.mu0_hat[t[j]];
      for (std::size_t j = 0; j < c.size(); ++j) psi0[j] = nuis.mu1_hat[c[j]] - train.y[c[j]];
      auto tau1 = fit_stacked(config.t_spec, select_rows(train.x, t), psi1).predict(x_new);
      auto tau0 = fit_stacked(config.t_spec, select_rows(train.x, c), psi0).predict(x_new);
      Vector e = clip_propensity(
          fit_stacked(reseeded(config.e_spec, seed), train.x, train.d_as_double()).predict_probability(x_new),
          config.clip_epsilon);
      return e.cwiseProduct(tau0) + (Vector::Ones(e.size()) - e).cwiseProduct(tau1);
    }
    if (m == Method::CF) {
      CausalForestParams p = config.forest;
      p.seed = seed;
      return predict_cate(fit_causal_forest(train, nuis, p), x_new);
    }
    PseudoOutcome pseudo = m == Method::DR ? dr_pseudo(train, nuis)
                           : m == Method::R ? r_pseudo(train, nuis)
                                            : ipw_pseudo(train, nuis);
    return run_second_stage(pseudo, train.x, config, seed).predict(x_new);
  };
}

std::string config_fingerprint(Method m, const MetaConfig& config) {
  Json j = meta_config_to_json(config);
  j["method"] = method_name(m);
  return j.dump();
}

}  // namespace cate
