#include "cate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "cate/csv.hpp"
#include "cate/error.hpp"
#include "cate/rng.hpp"

namespace cate {

IndexList Dataset::arm(int value) const {
  IndexList rows;
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (d[i] == value) rows.push_back(i);
  }
  return rows;
}

void validate(const Dataset& data) {
  const Eigen::Index n = data.y.size();
  if (n < 2) throw DataError("dataset needs at least 2 rows, got " + std::to_string(n));
  if (data.d.size() != n || data.x.rows() != n) {
    throw DataError("y, d and x have mismatched row counts");
  }
  if (data.x.cols() < 1) throw DataError("dataset needs at least one covariate");
  if (static_cast<Eigen::Index>(data.feature_names.size()) != data.x.cols()) {
    throw DataError("feature name count does not match covariate count");
  }
  Eigen::Index treated = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(data.y[i])) {
      throw DataError("non-finite outcome at row " + std::to_string(i + 1));
    }
    if (data.d[i] != 0 && data.d[i] != 1) {
      throw DataError("treatment not binary at row " + std::to_string(i + 1));
    }
    treated += data.d[i];
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
      if (!std::isfinite(data.x(i, j))) {
        throw DataError("non-finite covariate at row " + std::to_string(i + 1) + ", column '" +
                        data.feature_names[j] + "'");
      }
    }
  }
  if (treated == 0 || treated == n) throw DataError("treatment arm empty");
}

Dataset make_dataset(Vector y, Eigen::VectorXi d, Matrix x, std::vector<std::string> names) {
  if (names.empty()) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  }
  Dataset data{std::move(y), std::move(d), std::move(x), std::move(names)};
  validate(data);
  return data;
}

Matrix select_rows(const Matrix& x, const IndexList& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = x.row(rows[r]);
  return out;
}

Vector select(const Vector& v, const IndexList& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = v[rows[r]];
  return out;
}

IndexList iota_index(Eigen::Index n) {
  IndexList idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

Dataset subset(const Dataset& data, const IndexList& rows) {
  Dataset out;
  out.y = select(data.y, rows);
  out.d.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out.d[r] = data.d[rows[r]];
  out.x = select_rows(data.x, rows);
  out.feature_names = data.feature_names;
  return out;
}

Dataset load_csv(const std::string& path, const std::string& outcome_col,
                 const std::string& treatment_col, const std::vector<std::string>& one_hot_cols) {
  CsvTable table = read_csv_table(path);
  auto yj = table.column_index(outcome_col);
  auto dj = table.column_index(treatment_col);
  if (!yj) throw DataError("missing outcome column '" + outcome_col + "' in '" + path + "'");
  if (!dj) throw DataError("missing treatment column '" + treatment_col + "' in '" + path + "'");
  for (const auto& c : one_hot_cols) {
    if (!table.column_index(c)) throw DataError("missing one-hot column '" + c + "'");
  }
  const auto n = static_cast<Eigen::Index>(table.rows.size());

  auto numeric_cell = [&](std::size_t i, std::size_t j) {
    auto v = parse_double(table.rows[i][j]);
    if (!v || !std::isfinite(*v)) {
      throw DataError("non-numeric value '" + table.rows[i][j] + "' at row " +
                      std::to_string(i + 1) + ", column '" + table.header[j] + "'");
    }
    return *v;
  };

  Vector y(n);
  Eigen::VectorXi d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = numeric_cell(i, *yj);
    double dv = numeric_cell(i, *dj);
    if (dv != 0.0 && dv != 1.0) throw DataError("treatment not binary at row " + std::to_string(i + 1));
    d[i] = static_cast<int>(dv);
  }

  // Covariates keep file order; one-hot columns expand in place into one
  // dummy per distinct level (levels sorted lexicographically).
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == *yj || j == *dj) continue;
    const std::string& name = table.header[j];
    bool expand = std::find(one_hot_cols.begin(), one_hot_cols.end(), name) != one_hot_cols.end();
    if (expand) {
      std::set<std::string> levels;
      for (const auto& row : table.rows) levels.insert(row[j]);
      for (const auto& level : levels) {
        names.push_back(name + "=" + level);
        std::vector<double> col(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) col[i] = table.rows[i][j] == level ? 1.0 : 0.0;
        columns.push_back(std::move(col));
      }
    } else {
      names.push_back(name);
      std::vector<double> col(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) col[i] = numeric_cell(static_cast<std::size_t>(i), j);
      columns.push_back(std::move(col));
    }
  }
  Matrix x(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = columns[j][i];
  }
  return make_dataset(std::move(y), std::move(d), std::move(x), std::move(names));
}

void write_csv(const std::string& path, const Dataset& data, const std::string& outcome_col,
               const std::string& treatment_col) {
  CsvTable table;
  table.header = {outcome_col, treatment_col};
  table.header.insert(table.header.end(), data.feature_names.begin(), data.feature_names.end());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::vector<std::string> row{format_double(data.y[i]), std::to_string(data.d[i])};
    for (Eigen::Index j = 0; j < data.p(); ++j) row.push_back(format_double(data.x(i, j)));
    table.rows.push_back(std::move(row));
  }
  write_csv_table(path, table);
}

IndexList FoldPlan::members(int fold) const {
  IndexList out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

FoldPlan make_folds(Eigen::Index n, int k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw ArgumentError("fold count must satisfy 2 <= k <= n (k=" + std::to_string(k) +
                        ", n=" + std::to_string(n) + ")");
  }
  // Shuffle, then deal round-robin: sizes differ by at most one.
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine rng = make_engine(seed, 0xF01D);
  shuffle(order, rng);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    plan.assignment[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k)) + 1;
  }
  return plan;
}

TrainEstimateSplit split_for_fold(const FoldPlan& plan, int fold) {
  if (fold < 1 || fold > plan.k) {
    throw ArgumentError("fold " + std::to_string(fold) + " out of range 1.." +
                        std::to_string(plan.k));
  }
  TrainEstimateSplit split;
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
    auto idx = static_cast<Eigen::Index>(i);
    (plan.assignment[i] == fold ? split.estimate : split.train).push_back(idx);
  }
  return split;
}

}  // namespace cate
