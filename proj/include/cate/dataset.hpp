#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace cate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<Eigen::Index>;

/// The (Y, D, X) triple. Construct through make_dataset / load_csv so the
/// invariants (finite, binary treatment, both arms present) always hold.
struct Dataset {
  Vector y;
  Eigen::VectorXi d;
  Matrix x;
  std::vector<std::string> feature_names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return x.cols(); }
  Vector d_as_double() const { return d.cast<double>(); }
  IndexList arm(int value) const;
};

/// Validates and assembles a dataset. Throws DataError on any violation.
Dataset make_dataset(Vector y, Eigen::VectorXi d, Matrix x,
                     std::vector<std::string> feature_names = {});

void validate(const Dataset& data);

/// Rows `rows` of `data`, in the given order (duplicates allowed). The result
/// is not revalidated; callers check arm presence where required.
Dataset subset(const Dataset& data, const IndexList& rows);

Dataset load_csv(const std::string& path, const std::string& outcome_col,
                 const std::string& treatment_col,
                 const std::vector<std::string>& one_hot_cols = {});
void write_csv(const std::string& path, const Dataset& data, const std::string& outcome_col = "y",
               const std::string& treatment_col = "d");

/// Balanced K-way partition. Folds are numbered 1..k.
struct FoldPlan {
  std::vector<int> assignment;
  int k = 0;
  std::uint64_t seed = 0;

  Eigen::Index n() const { return static_cast<Eigen::Index>(assignment.size()); }
  IndexList members(int fold) const;
};

FoldPlan make_folds(Eigen::Index n, int k, std::uint64_t seed);

struct TrainEstimateSplit {
  IndexList train;     // rows outside the fold
  IndexList estimate;  // rows in the fold
};

TrainEstimateSplit split_for_fold(const FoldPlan& plan, int fold);

Matrix select_rows(const Matrix& x, const IndexList& rows);
Vector select(const Vector& v, const IndexList& rows);
IndexList iota_index(Eigen::Index n);

}  // namespace cate
