#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cate/dataset.hpp"
#include "cate/nuisance.hpp"
#include "cate/rng.hpp"
#include "cate/tree.hpp"

namespace cate {

/// Locally centered data: y_res = Y - mu_hat(X), d_res = D - e_hat(X).
struct CenteredData {
  Vector y_res;
  Vector d_res;
};

CenteredData local_center(const Dataset& data, const NuisanceEstimates& nuis);

/// Residual-on-residual slope sum(y_res * d_res) / sum(d_res^2); empty when
/// the denominator is zero.
std::optional<double> leaf_tau(std::span<const double> y_res, std::span<const double> d_res);

struct CausalForestParams {
  int n_trees = 500;
  double min_node_size = 10;        // per child, counted on the split half
  double subsample_fraction = 0.5;  // drawn without replacement per tree
  double mtry_fraction = 1.0;       // covariates tried at each split
  int max_depth = -1;
  bool honesty = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Estimate-half statistics of one node.
struct HonestStats {
  double count = 0;
  double treated = 0;
  double sum_yd = 0;  // sum of y_res * d_res
  double sum_dd = 0;  // sum of d_res^2

  bool valid() const { return treated >= 1 && count - treated >= 1 && sum_dd > 0; }
  double tau() const { return sum_yd / sum_dd; }
};

struct CausalTree {
  std::vector<tree::Node> nodes;    // structure grown on the split half only
  std::vector<HonestStats> honest;  // per node, from the estimate half only
  /// Nearest node on the root path (itself included) with valid honest
  /// statistics; -1 when even the root is invalid.
  std::vector<int> effective;
  IndexList split_rows;
  IndexList estimate_rows;
  std::vector<int> estimate_leaf;  // leaf reached by each estimate row

  /// True when estimate row r (position in estimate_rows) falls under `node`.
  bool contains(std::size_t r, int node) const {
    for (int cur = estimate_leaf[r]; cur >= 0; cur = nodes[cur].parent) {
      if (cur == node) return true;
    }
    return false;
  }

  /// Effective node for a covariate row, or -1.
  template <typename Row>
  int effective_node(const Row& row) const {
    return effective[tree::find_leaf(nodes, row)];
  }
};

/// Grows splits on `split_rows` and estimates leaves on `estimate_rows`.
CausalTree fit_causal_tree(const Matrix& x, const CenteredData& centered,
                           const Eigen::VectorXi& d, const IndexList& split_rows,
                           const IndexList& estimate_rows, const CausalForestParams& params,
                           Engine& rng);

class CausalForestModel {
 public:
  CausalForestModel(std::vector<CausalTree> trees, CausalForestParams params,
                    CenteredData centered, Eigen::Index p)
      : trees_(std::move(trees)), params_(params), centered_(std::move(centered)), p_(p) {}

  const std::vector<CausalTree>& trees() const { return trees_; }
  const CausalForestParams& params() const { return params_; }
  const CenteredData& centered() const { return centered_; }
  Eigen::Index n_features() const { return p_; }

 private:
  std::vector<CausalTree> trees_;
  CausalForestParams params_;
  CenteredData centered_;
  Eigen::Index p_;
};

/// B honest trees on subsamples of `rows` (all rows when empty), centered with
/// the supplied out-of-fold nuisances.
CausalForestModel fit_causal_forest(const Dataset& data, const NuisanceEstimates& nuis,
                                    const CausalForestParams& params, const IndexList& rows = {});

/// alpha_i(x) = B'^-1 sum_b 1{i in L_b(x)} / |L_b(x)| over estimate-half rows,
/// indexed by dataset row. Trees whose root is invalid are skipped and B'
/// counts the rest, so the weights sum to one.
Vector forest_weights(const CausalForestModel& model, std::span<const double> x_point);

/// sum alpha_i y_res_i d_res_i / sum alpha_i d_res_i^2 per row of x, assembled
/// from per-node sums rather than explicit weights.
Vector predict_cate(const CausalForestModel& model, const Matrix& x);

/// Outer K-fold loop: a forest trained on S_a predicts S_k.
Vector causal_forest_crossfit(const Dataset& data, const FoldPlan& plan,
                              const NuisanceEstimates& nuis, const CausalForestParams& params);

/// Versioned JSON tree dump (see docs/forest_format.md).
void save_forest_json(const std::string& path, const CausalForestModel& model);
CausalForestModel load_forest_json(const std::string& path);

}  // namespace cate
