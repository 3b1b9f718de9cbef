#include "cate/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cate/simd/kernels.hpp"

namespace cate::tree {

SortedColumns::SortedColumns(const Matrix& x, const IndexList& rows) {
  lists_.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& list = lists_[f];
    list = rows;
    std::sort(list.begin(), list.end(), [&](Eigen::Index a, Eigen::Index b) {
      double xa = x(a, f), xb = x(b, f);
      return xa < xb || (xa == xb && a < b);
    });
  }
}

SortedColumns SortedColumns::filtered(const std::vector<char>& keep) const {
  SortedColumns out;
  out.lists_.resize(lists_.size());
  for (std::size_t f = 0; f < lists_.size(); ++f) {
    auto& dst = out.lists_[f];
    dst.reserve(lists_[f].size());
    for (Eigen::Index r : lists_[f]) {
      if (keep[r]) dst.push_back(r);
    }
  }
  return out;
}

namespace {

struct Segment {
  int node;
  std::size_t begin, end;
};

struct Scratch {
  std::vector<double> cl, ul, vl, scores;
  std::vector<Eigen::Index> buffer;
  std::vector<char> goes_left;
};

SplitChoice best_split(const Matrix& x, const std::vector<std::vector<Eigen::Index>>& lists,
                       const Segment& seg, const Node& node, const RowStats& stats,
                       const GrowParams& params, const std::vector<int>& features,
                       Scratch& s) {
  SplitChoice best;
  const std::size_t m = seg.end - seg.begin;
  if (m < 2) return best;
  double best_score = params.criterion == Criterion::Regression
                          ? node.v * node.v / node.u
                          : 0.0;
  const double floor_score = best_score;
  const std::size_t npos = m - 1;
  s.cl.resize(npos);
  s.ul.resize(npos);
  s.vl.resize(npos);
  s.scores.resize(npos);

  for (int f : features) {
    const auto* list = lists[f].data() + seg.begin;
    double c = 0.0, u = 0.0, v = 0.0;
    for (std::size_t k = 0; k < npos; ++k) {
      Eigen::Index r = list[k];
      c += stats.c[r];
      u += stats.u[r];
      v += stats.v[r];
      s.cl[k] = c;
      s.ul[k] = u;
      s.vl[k] = v;
    }
    if (params.criterion == Criterion::Regression) {
      simd::regression_split_scores(s.ul, s.vl, node.u, node.v, s.scores);
    } else {
      simd::causal_split_scores(s.cl, s.ul, s.vl, node.c, node.u, node.v, s.scores);
    }
    for (std::size_t k = 0; k < npos; ++k) {
      double xa = x(list[k], f), xb = x(list[k + 1], f);
      if (!(xa < xb)) continue;
      if (s.cl[k] < params.min_node_size || node.c - s.cl[k] < params.min_node_size) continue;
      if (!(s.ul[k] > 0.0) || !(node.u - s.ul[k] > 0.0)) continue;
      double score = s.scores[k];
      if (!std::isfinite(score) || !(score > best_score)) continue;
      double thr = 0.5 * (xa + xb);
      if (!(thr < xb)) thr = xa;
      best_score = score;
      best.feature = f;
      best.threshold = thr;
      best.score = score;
    }
  }
  if (best.feature >= 0 && params.criterion == Criterion::Regression) {
    // Require a real reduction of the weighted squared error.
    double gain = best.score - floor_score;
    if (!(gain > 1e-12 * std::max(1.0, std::abs(floor_score)))) best.feature = -1;
  }
  return best;
}

}  // namespace

std::vector<Node> grow(const Matrix& x, SortedColumns columns, const RowStats& stats,
                       const GrowParams& params, Engine* rng) {
  auto& lists = columns.lists();
  const int p = static_cast<int>(x.cols());
  std::vector<Node> nodes;
  if (lists.empty() || lists.front().empty()) {
    nodes.push_back(Node{});
    return nodes;
  }

  Node root;
  for (Eigen::Index r : lists.front()) {
    root.c += stats.c[r];
    root.u += stats.u[r];
    root.v += stats.v[r];
  }
  nodes.push_back(root);

  const int mtry = (params.mtry <= 0 || params.mtry >= p) ? p : params.mtry;
  std::vector<int> all_features(static_cast<std::size_t>(p));
  std::iota(all_features.begin(), all_features.end(), 0);

  Scratch scratch;
  scratch.goes_left.assign(static_cast<std::size_t>(x.rows()), 0);
  std::vector<Segment> stack{{0, 0, lists.front().size()}};

  while (!stack.empty()) {
    Segment seg = stack.back();
    stack.pop_back();
    Node node = nodes[seg.node];

    bool depth_ok = params.max_depth < 0 || node.depth < params.max_depth;
    if (!depth_ok || node.c < 2.0 * params.min_node_size) continue;

    std::vector<int> features;
    if (mtry == p) {
      features = all_features;
    } else {
      auto picked = sample_without_replacement(*rng, static_cast<std::size_t>(p),
                                               static_cast<std::size_t>(mtry));
      features.assign(picked.begin(), picked.end());
      std::sort(features.begin(), features.end());
    }

    SplitChoice split = best_split(x, lists, seg, node, stats, params, features, scratch);
    if (split.feature < 0) continue;

    // Stable partition of every feature list keeps the segments aligned.
    const auto* split_list = lists[split.feature].data();
    std::size_t n_left = 0;
    for (std::size_t k = seg.begin; k < seg.end; ++k) {
      Eigen::Index r = split_list[k];
      bool left = x(r, split.feature) <= split.threshold;
      scratch.goes_left[r] = left;
      n_left += left;
    }
    scratch.buffer.resize(seg.end - seg.begin);
    for (auto& list : lists) {
      std::size_t li = seg.begin, ri = 0;
      for (std::size_t k = seg.begin; k < seg.end; ++k) {
        Eigen::Index r = list[k];
        if (scratch.goes_left[r]) {
          list[li++] = r;
        } else {
          scratch.buffer[ri++] = r;
        }
      }
      std::copy(scratch.buffer.begin(), scratch.buffer.begin() + ri, list.begin() + li);
    }

    Node left, right;
    left.parent = right.parent = seg.node;
    left.depth = right.depth = node.depth + 1;
    const auto& first = lists.front();
    for (std::size_t k = seg.begin; k < seg.end; ++k) {
      Eigen::Index r = first[k];
      Node& child = k < seg.begin + n_left ? left : right;
      child.c += stats.c[r];
      child.u += stats.u[r];
      child.v += stats.v[r];
    }
    int left_id = static_cast<int>(nodes.size());
    nodes.push_back(left);
    nodes.push_back(right);
    Node& parent = nodes[seg.node];
    parent.feature = split.feature;
    parent.threshold = split.threshold;
    parent.score = split.score;
    parent.left = left_id;
    parent.right = left_id + 1;

    // Right pushed first so the left subtree is expanded first.
    stack.push_back({left_id + 1, seg.begin + n_left, seg.end});
    stack.push_back({left_id, seg.begin, seg.begin + n_left});
  }
  return nodes;
}

}  // namespace cate::tree
