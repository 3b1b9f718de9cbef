#include "cate/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "cate/error.hpp"
#include "cate/rng.hpp"

namespace cate {

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

double normal_cdf(double z) { return boost::math::cdf(boost::math::normal(), z); }

namespace {

constexpr std::uint64_t kBootstrapStream = 0xB007;

Vector heldout_predictions(const FitPredict& estimator, const Dataset& data, const FoldPlan& plan,
                           std::uint64_t seed) {
  Vector tau(data.n());
  for (int k = 1; k <= plan.k; ++k) {
    auto split = split_for_fold(plan, k);
    Vector pred = estimator(subset(data, split.train), select_rows(data.x, split.estimate),
                            derive_seed(seed, static_cast<std::uint64_t>(k)));
    for (std::size_t j = 0; j < split.estimate.size(); ++j) tau[split.estimate[j]] = pred[j];
  }
  return tau;
}

// Empirical quantile with linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& s, double p) {
  const double pos = p * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

BootstrapResult bootstrap_ci(const FitPredict& estimator, const Dataset& data, const FoldPlan& plan,
                             const BootstrapOptions& options, Vector tau_hat) {
  if (options.replications < 2) throw ArgumentError("bootstrap needs at least 2 replications");
  if (!(options.alpha > 0 && options.alpha < 1)) throw ArgumentError("alpha must be in (0, 1)");
  if (plan.n() != data.n()) throw ArgumentError("fold plan does not match dataset");
  const Eigen::Index n = data.n();
  if (tau_hat.size() == 0) tau_hat = heldout_predictions(estimator, data, plan, options.seed);
  if (tau_hat.size() != n) throw ArgumentError("tau_hat length does not match dataset");

  BootstrapResult res;
  res.tau_hat = tau_hat;
  Matrix draws(n, options.replications);
  int kept = 0;
  for (int b = 0; b < options.replications; ++b) {
    Engine rng = make_engine(options.seed, kBootstrapStream + static_cast<std::uint64_t>(b));
    Vector column(n);
    try {
      for (int k = 1; k <= plan.k; ++k) {
        auto split = split_for_fold(plan, k);
        IndexList by_arm[2];
        for (auto i : split.train) by_arm[data.d[i]].push_back(i);
        IndexList resampled;
        resampled.reserve(split.train.size());
        for (const auto& arm : by_arm) {
          for (std::size_t j = 0; j < arm.size(); ++j) {
            resampled.push_back(arm[uniform_index(rng, arm.size())]);
          }
        }
        Vector pred = estimator(subset(data, resampled), select_rows(data.x, split.estimate),
                                derive_seed(options.seed, (static_cast<std::uint64_t>(b) << 8) + k));
        if (!pred.allFinite()) throw EstimationError("non-finite bootstrap prediction");
        for (std::size_t j = 0; j < split.estimate.size(); ++j) column[split.estimate[j]] = pred[j];
      }
    } catch (const Error&) {
      ++res.dropped;
      continue;
    }
    draws.col(kept++) = column;
  }
  if (res.dropped * 10 > options.replications) {
    throw EstimationError("bootstrap: " + std::to_string(res.dropped) + " of " +
                          std::to_string(options.replications) + " replicates failed");
  }
  if (kept < 2) throw EstimationError("bootstrap: fewer than two usable replicates");
  res.replications = kept;
  res.draws = draws.leftCols(kept);

  res.sigma_hat.resize(n);
  res.lower.resize(n);
  res.upper.resize(n);
  const double z = normal_quantile(1.0 - options.alpha / 2.0);
  std::vector<double> row(kept);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = res.draws.row(i).mean();
    const double ss = (res.draws.row(i).array() - mean).square().sum();
    res.sigma_hat[i] = std::sqrt(ss / static_cast<double>(kept - 1));
    if (options.percentile) {
      for (int b = 0; b < kept; ++b) row[b] = res.draws(i, b);
      std::sort(row.begin(), row.end());
      res.lower[i] = std::min(tau_hat[i], quantile_sorted(row, options.alpha / 2.0));
      res.upper[i] = std::max(tau_hat[i], quantile_sorted(row, 1.0 - options.alpha / 2.0));
    } else {
      res.lower[i] = tau_hat[i] - z * res.sigma_hat[i];
      res.upper[i] = tau_hat[i] + z * res.sigma_hat[i];
    }
  }
  return res;
}

IndexList effect_order(const Vector& tau_hat) {
  IndexList order = iota_index(tau_hat.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return tau_hat[a] < tau_hat[b]; });
  return order;
}

std::vector<SortedEffect> sorted_effects(const CateEstimate& cate) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  IndexList order = effect_order(cate.tau_hat);
  std::vector<SortedEffect> out;
  out.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    auto i = order[r];
    out.push_back({static_cast<int>(r + 1), i, cate.tau_hat[i],
                   cate.lower ? (*cate.lower)[i] : nan, cate.upper ? (*cate.upper)[i] : nan});
  }
  return out;
}

std::vector<ClanRow> clan(const Vector& tau_hat, const Dataset& data, double q, double gamma) {
  if (!(q > 0 && q <= 0.5)) throw ArgumentError("CLAN share q must be in (0, 0.5]");
  if (!(gamma > 0 && gamma < 1)) throw ArgumentError("CLAN level gamma must be in (0, 1)");
  if (tau_hat.size() != data.n()) throw ArgumentError("tau_hat length does not match dataset");
  const auto n = data.n();
  const auto m = static_cast<Eigen::Index>(std::floor(q * static_cast<double>(n)));
  if (m < 2) throw ArgumentError("CLAN groups need at least two observations each");
  IndexList order = effect_order(tau_hat);
  IndexList least(order.begin(), order.begin() + m);
  IndexList most(order.end() - m, order.end());
  const double z = normal_quantile((1.0 + gamma) / 2.0);

  auto moments = [&](const IndexList& rows, Eigen::Index j) {
    double mean = 0.0;
    for (auto i : rows) mean += data.x(i, j);
    mean /= static_cast<double>(rows.size());
    double ss = 0.0;
    for (auto i : rows) ss += (data.x(i, j) - mean) * (data.x(i, j) - mean);
    return std::pair{mean, ss / static_cast<double>(rows.size() - 1)};
  };

  std::vector<ClanRow> out;
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    auto [ml, vl] = moments(least, j);
    auto [mm, vm] = moments(most, j);
    ClanRow r;
    r.covariate = data.feature_names[j];
    r.mean_least = ml;
    r.mean_most = mm;
    r.difference = mm - ml;
    r.se = std::sqrt(vl / static_cast<double>(m) + vm / static_cast<double>(m));
    r.lower = r.difference - z * r.se;
    r.upper = r.difference + z * r.se;
    if (r.se > 0) {
      r.p_value = 2.0 * (1.0 - normal_cdf(std::abs(r.difference) / r.se));
    } else {
      r.p_value = r.difference == 0.0 ? 1.0 : 0.0;
    }
    out.push_back(r);
  }
  return out;
}

CorrelationMatrix method_correlation(const std::vector<CateEstimate>& estimates) {
  const auto k = static_cast<Eigen::Index>(estimates.size());
  CorrelationMatrix out;
  out.rho = Matrix::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
  out.defined.setConstant(k, k, false);
  if (k == 0) return out;
  const auto n = estimates.front().tau_hat.size();
  std::vector<Vector> centered;
  for (const auto& e : estimates) {
    if (e.tau_hat.size() != n) throw ArgumentError("estimates differ in length");
    out.methods.push_back(e.method);
    centered.push_back(e.tau_hat.array() - e.tau_hat.mean());
  }
  for (Eigen::Index a = 0; a < k; ++a) {
    out.rho(a, a) = 1.0;
    out.defined(a, a) = true;
    for (Eigen::Index b = a + 1; b < k; ++b) {
      const double saa = centered[a].squaredNorm(), sbb = centered[b].squaredNorm();
      if (saa > 0 && sbb > 0) {
        const double r = std::clamp(centered[a].dot(centered[b]) / std::sqrt(saa * sbb), -1.0, 1.0);
        out.rho(a, b) = out.rho(b, a) = r;
        out.defined(a, b) = out.defined(b, a) = true;
      }
    }
  }
  return out;
}

std::vector<BalanceRow> ipw_balance(const Dataset& data, const Vector& e_hat) {
  if (e_hat.size() != data.n() || !e_hat.allFinite()) {
    throw ArgumentError("ipw_balance: propensity scores missing or not finite");
  }
  if ((e_hat.array() <= 0).any() || (e_hat.array() >= 1).any()) {
    throw ArgumentError("ipw_balance: propensity scores must lie in (0, 1)");
  }
  IndexList treated = data.arm(1), control = data.arm(0);
  std::vector<BalanceRow> out;
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    auto mean_var = [&](const IndexList& rows) {
      double mean = 0.0;
      for (auto i : rows) mean += data.x(i, j);
      mean /= static_cast<double>(rows.size());
      double ss = 0.0;
      for (auto i : rows) ss += (data.x(i, j) - mean) * (data.x(i, j) - mean);
      return std::pair{mean, rows.size() > 1 ? ss / static_cast<double>(rows.size() - 1) : 0.0};
    };
    auto weighted = [&](const IndexList& rows, bool is_treated) {
      double num = 0.0, den = 0.0;
      for (auto i : rows) {
        const double w = is_treated ? 1.0 / e_hat[i] : 1.0 / (1.0 - e_hat[i]);
        num += w * data.x(i, j);
        den += w;
      }
      return num / den;
    };
    auto [mt, vt] = mean_var(treated);
    auto [mc, vc] = mean_var(control);
    BalanceRow r;
    r.covariate = data.feature_names[j];
    r.mean_treated = mt;
    r.mean_control = mc;
    r.ipw_mean_treated = weighted(treated, true);
    r.ipw_mean_control = weighted(control, false);
    const double pooled = std::sqrt((vt + vc) / 2.0);
    if (pooled > 0) {
      r.smd_raw = (mt - mc) / pooled;
      r.smd_ipw = (r.ipw_mean_treated - r.ipw_mean_control) / pooled;
    }
    out.push_back(r);
  }
  return out;
}

AteSummary ate_summary(const Vector& tau_hat, double q) {
  if (!(q > 0 && q <= 0.5)) throw ArgumentError("summary share q must be in (0, 0.5]");
  if (tau_hat.size() == 0) throw ArgumentError("empty CATE estimate");
  const auto n = tau_hat.size();
  const auto m = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(q * static_cast<double>(n))));
  IndexList order = effect_order(tau_hat);
  AteSummary s;
  s.q = q;
  s.ate = tau_hat.mean();
  for (Eigen::Index r = 0; r < m; ++r) {
    s.least_mean += tau_hat[order[r]];
    s.most_mean += tau_hat[order[n - 1 - r]];
  }
  s.least_mean /= static_cast<double>(m);
  s.most_mean /= static_cast<double>(m);
  return s;
}

}  // namespace cate
