#pragma once

#include <cstdint>
#include <vector>

#include "cate/dataset.hpp"
#include "cate/rng.hpp"

namespace cate::tree {

// Greedy binary tree growth shared by the regression learners and the causal
// tree. Each row carries a count c (for minimum node size) and two additive
// statistics (u, v). A node's estimate is v/u:
//   regression: u = w,      v = w*y          -> weighted mean
//   causal:     u = d_res^2, v = y_res*d_res -> residual-on-residual slope
// Split scores come from the simd kernels.

enum class Criterion {
  Regression,  // maximize vL^2/uL + vR^2/uR (weighted SSE reduction)
  Causal,      // maximize cL*cR*(vL/uL - vR/uR)^2
};

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;
  double c = 0.0, u = 0.0, v = 0.0;  // statistics of the rows that grew this node
  double score = 0.0;                // criterion value of the chosen split

  bool is_leaf() const { return feature < 0; }
  double estimate() const { return v / u; }
};

struct RowStats {
  std::vector<double> c, u, v;  // indexed by row of the design matrix
};

struct GrowParams {
  Criterion criterion = Criterion::Regression;
  int max_depth = -1;           // negative: unlimited
  double min_node_size = 1.0;   // minimum count in each child
  int mtry = 0;                 // candidate features per split; <=0 or >=p means all
};

/// Row lists sorted by each feature (ties broken by row index).
class SortedColumns {
 public:
  SortedColumns() = default;
  SortedColumns(const Matrix& x, const IndexList& rows);
  /// Restriction of these lists to rows with keep[row] != 0, preserving order.
  SortedColumns filtered(const std::vector<char>& keep) const;

  std::size_t size() const { return lists_.empty() ? 0 : lists_.front().size(); }
  std::vector<std::vector<Eigen::Index>>& lists() { return lists_; }
  const std::vector<std::vector<Eigen::Index>>& lists() const { return lists_; }

 private:
  std::vector<std::vector<Eigen::Index>> lists_;
};

/// Grows a tree over the rows in `columns` (consumed). `rng` is only used when
/// mtry restricts the candidate features. Ties in the criterion resolve to the
/// lowest feature index, then the lowest threshold.
std::vector<Node> grow(const Matrix& x, SortedColumns columns, const RowStats& stats,
                       const GrowParams& params, Engine* rng);

/// Index of the leaf reached by `row` (x <= threshold goes left).
template <typename Row>
int find_leaf(const std::vector<Node>& nodes, const Row& row) {
  int id = 0;
  while (!nodes[id].is_leaf()) {
    const Node& nd = nodes[id];
    id = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return id;
}

/// Split selected for a node; feature -1 when no valid split exists.
struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;
};

}  // namespace cate::tree
