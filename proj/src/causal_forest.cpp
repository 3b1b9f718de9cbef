#include "cate/causal_forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "cate/error.hpp"
#include "cate/parallel.hpp"
#include "cate/simd/kernels.hpp"
#include "json.hpp"

namespace cate {

void CausalForestParams::validate() const {
  if (n_trees < 1) throw ArgumentError("causal forest needs n_trees >= 1");
  if (!(min_node_size >= 1)) throw ArgumentError("causal forest min_node_size must be >= 1");
  if (!(subsample_fraction > 0 && subsample_fraction <= 1)) {
    throw ArgumentError("subsample_fraction must be in (0, 1]");
  }
  if (!(mtry_fraction > 0 && mtry_fraction <= 1)) {
    throw ArgumentError("mtry_fraction must be in (0, 1]");
  }
}

CenteredData local_center(const Dataset& data, const NuisanceEstimates& nuis) {
  if (nuis.n() != data.n() || nuis.mu_hat.size() != data.n()) {
    throw ArgumentError("nuisance estimates do not match dataset");
  }
  CenteredData c;
  c.y_res = data.y - nuis.mu_hat;
  c.d_res = data.d_as_double() - nuis.e_hat;
  if (!c.y_res.allFinite() || !c.d_res.allFinite()) {
    throw EstimationError("local centering needs finite mu_hat and e_hat");
  }
  return c;
}

std::optional<double> leaf_tau(std::span<const double> y_res, std::span<const double> d_res) {
  if (y_res.size() != d_res.size()) throw ArgumentError("leaf_tau: length mismatch");
  double den = simd::dot(d_res, d_res);
  if (!(den > 0)) return std::nullopt;
  return simd::dot(y_res, d_res) / den;
}

CausalTree fit_causal_tree(const Matrix& x, const CenteredData& centered,
                           const Eigen::VectorXi& d, const IndexList& split_rows,
                           const IndexList& estimate_rows, const CausalForestParams& params,
                           Engine& rng) {
  const Eigen::Index n = x.rows();
  tree::RowStats stats{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                       std::vector<double>(n, 0.0)};
  for (auto i : split_rows) {
    stats.c[i] += 1.0;
    stats.u[i] += centered.d_res[i] * centered.d_res[i];
    stats.v[i] += centered.y_res[i] * centered.d_res[i];
  }
  const int p = static_cast<int>(x.cols());
  const int mtry = std::clamp(static_cast<int>(std::ceil(params.mtry_fraction * p)), 1, p);
  tree::GrowParams gp{tree::Criterion::Causal, params.max_depth, params.min_node_size, mtry};

  CausalTree t;
  t.split_rows = split_rows;
  t.estimate_rows = estimate_rows;
  if (split_rows.empty()) {
    t.nodes.assign(1, tree::Node{});
  } else {
    t.nodes = tree::grow(x, tree::SortedColumns(x, split_rows), stats, gp, &rng);
  }

  // Honest statistics: each estimate row contributes to every node on its path.
  t.honest.assign(t.nodes.size(), HonestStats{});
  t.estimate_leaf.resize(estimate_rows.size());
  for (std::size_t r = 0; r < estimate_rows.size(); ++r) {
    auto i = estimate_rows[r];
    int leaf = tree::find_leaf(t.nodes, [&](int f) { return x(i, f); });
    t.estimate_leaf[r] = leaf;
    for (int node = leaf; node >= 0; node = t.nodes[node].parent) {
      HonestStats& h = t.honest[node];
      h.count += 1;
      h.treated += d[i];
      h.sum_yd += centered.y_res[i] * centered.d_res[i];
      h.sum_dd += centered.d_res[i] * centered.d_res[i];
    }
  }
  // Parents precede children in node order.
  t.effective.assign(t.nodes.size(), -1);
  for (std::size_t node = 0; node < t.nodes.size(); ++node) {
    if (t.honest[node].valid()) {
      t.effective[node] = static_cast<int>(node);
    } else if (t.nodes[node].parent >= 0) {
      t.effective[node] = t.effective[t.nodes[node].parent];
    }
  }
  return t;
}

CausalForestModel fit_causal_forest(const Dataset& data, const NuisanceEstimates& nuis,
                                    const CausalForestParams& params, const IndexList& rows_in) {
  params.validate();
  CenteredData centered = local_center(data, nuis);
  IndexList rows = rows_in.empty() ? iota_index(data.n()) : rows_in;
  const std::size_t sub = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(params.subsample_fraction * static_cast<double>(rows.size()))),
      std::min<std::size_t>(2, rows.size()), rows.size());
  std::vector<CausalTree> trees(static_cast<std::size_t>(params.n_trees));
  parallel_for(trees.size(), [&](std::size_t b) {
    Engine rng = make_engine(params.seed, b);
    auto picked = sample_without_replacement(rng, rows.size(), sub);
    IndexList split_rows, estimate_rows;
    const std::size_t half = picked.size() / 2;
    for (std::size_t k = 0; k < picked.size(); ++k) {
      (k < half ? split_rows : estimate_rows).push_back(rows[picked[k]]);
    }
    if (!params.honesty) {
      split_rows.insert(split_rows.end(), estimate_rows.begin(), estimate_rows.end());
      estimate_rows = split_rows;
    }
    std::sort(split_rows.begin(), split_rows.end());
    std::sort(estimate_rows.begin(), estimate_rows.end());
    trees[b] = fit_causal_tree(data.x, centered, data.d, split_rows, estimate_rows, params, rng);
  });
  return CausalForestModel(std::move(trees), params, std::move(centered), data.p());
}

Vector forest_weights(const CausalForestModel& model, std::span<const double> x_point) {
  if (static_cast<Eigen::Index>(x_point.size()) != model.n_features()) {
    throw ArgumentError("forest_weights: covariate count mismatch");
  }
  Vector alpha = Vector::Zero(model.centered().y_res.size());
  std::vector<Eigen::Index> members;
  int contributing = 0;
  for (const auto& t : model.trees()) {
    int node = t.effective_node([&](int f) { return x_point[f]; });
    if (node < 0) continue;
    ++contributing;
    members.clear();
    for (std::size_t r = 0; r < t.estimate_rows.size(); ++r) {
      if (t.contains(r, node)) members.push_back(t.estimate_rows[r]);
    }
    const double share = 1.0 / static_cast<double>(members.size());
    for (auto i : members) alpha[i] += share;
  }
  if (contributing == 0) throw EstimationError("causal forest has no valid tree for this point");
  return alpha / static_cast<double>(contributing);
}

Vector predict_cate(const CausalForestModel& model, const Matrix& x) {
  if (x.cols() != model.n_features()) throw ArgumentError("predict_cate: covariate count mismatch");
  Vector out(x.rows());
  parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    double num = 0.0, den = 0.0;
    for (const auto& t : model.trees()) {
      int node = t.effective_node([&](int f) { return x(i, f); });
      if (node < 0) continue;
      const HonestStats& h = t.honest[node];
      num += h.sum_yd / h.count;
      den += h.sum_dd / h.count;
    }
    out[i] = den > 0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  });
  if (!out.allFinite()) throw EstimationError("causal forest has no valid tree for some prediction point");
  return out;
}

Vector causal_forest_crossfit(const Dataset& data, const FoldPlan& plan,
                              const NuisanceEstimates& nuis, const CausalForestParams& params) {
  if (plan.n() != data.n()) throw ArgumentError("fold plan does not match dataset");
  Vector tau(data.n());
  for (int k = 1; k <= plan.k; ++k) {
    auto split = split_for_fold(plan, k);
    CausalForestParams fold_params = params;
    fold_params.seed = derive_seed(params.seed, static_cast<std::uint64_t>(k));
    auto model = fit_causal_forest(data, nuis, fold_params, split.train);
    Vector pred = predict_cate(model, select_rows(data.x, split.estimate));
    for (std::size_t j = 0; j < split.estimate.size(); ++j) tau[split.estimate[j]] = pred[j];
  }
  return tau;
}

namespace {

constexpr const char* kForestFormat = "cate-causal-forest";
constexpr int kForestVersion = 1;

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_forest_json(const std::string& path, const CausalForestModel& model) {
  using nlohmann::json;
  const auto& pr = model.params();
  json j;
  j["format"] = kForestFormat;
  j["version"] = kForestVersion;
  j["params"] = {{"n_trees", pr.n_trees},
                 {"min_node_size", pr.min_node_size},
                 {"subsample_fraction", pr.subsample_fraction},
                 {"mtry_fraction", pr.mtry_fraction},
                 {"max_depth", pr.max_depth},
                 {"honesty", pr.honesty},
                 {"seed", pr.seed}};
  j["n_features"] = model.n_features();
  j["y_res"] = to_std(model.centered().y_res);
  j["d_res"] = to_std(model.centered().d_res);
  json trees = json::array();
  for (const auto& t : model.trees()) {
    json nodes = json::array();
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      const auto& nd = t.nodes[k];
      const auto& h = t.honest[k];
      nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.parent, nd.depth, h.count,
                       h.treated, h.sum_yd, h.sum_dd, t.effective[k]});
    }
    trees.push_back({{"nodes", nodes},
                     {"split_rows", t.split_rows},
                     {"estimate_rows", t.estimate_rows},
                     {"estimate_leaf", t.estimate_leaf}});
  }
  j["trees"] = std::move(trees);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump() << '\n';
}

CausalForestModel load_forest_json(const std::string& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  json j;
  try {
    in >> j;
    if (j.at("format") != kForestFormat) throw DataError(path + ": not a causal forest dump");
    if (j.at("version").get<int>() != kForestVersion) {
      throw DataError(path + ": unsupported forest format version");
    }
    CausalForestParams pr;
    const auto& jp = j.at("params");
    pr.n_trees = jp.at("n_trees");
    pr.min_node_size = jp.at("min_node_size");
    pr.subsample_fraction = jp.at("subsample_fraction");
    pr.mtry_fraction = jp.at("mtry_fraction");
    pr.max_depth = jp.at("max_depth");
    pr.honesty = jp.at("honesty");
    pr.seed = jp.at("seed");
    CenteredData centered{from_std(j.at("y_res").get<std::vector<double>>()),
                          from_std(j.at("d_res").get<std::vector<double>>())};
    std::vector<CausalTree> trees;
    for (const auto& jt : j.at("trees")) {
      CausalTree t;
      for (const auto& jn : jt.at("nodes")) {
        tree::Node nd;
        nd.feature = jn.at(0);
        nd.threshold = jn.at(1);
        nd.left = jn.at(2);
        nd.right = jn.at(3);
        nd.parent = jn.at(4);
        nd.depth = jn.at(5);
        t.nodes.push_back(nd);
        t.honest.push_back(HonestStats{jn.at(6), jn.at(7), jn.at(8), jn.at(9)});
        t.effective.push_back(jn.at(10));
      }
      t.split_rows = jt.at("split_rows").get<IndexList>();
      t.estimate_rows = jt.at("estimate_rows").get<IndexList>();
      t.estimate_leaf = jt.at("estimate_leaf").get<std::vector<int>>();
      trees.push_back(std::move(t));
    }
    return CausalForestModel(std::move(trees), pr, std::move(centered), j.at("n_features"));
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed forest dump (" + e.what() + ")");
  }
}

}  // namespace cate
