#include "cate/report.hpp"

#include <cmath>

#include "cate/csv.hpp"
#include "cate/error.hpp"

namespace cate {

std::string cell(double value) { return format_double(value); }

void write_cate_csv(const std::string& path, const CateEstimate& cate) {
  const bool bounds = cate.lower.has_value() && cate.upper.has_value();
  CsvTable t;
  t.header = bounds ? std::vector<std::string>{"id", "tau_hat", "lower", "upper", "method"}
                    : std::vector<std::string>{"id", "tau_hat", "method"};
  for (Eigen::Index i = 0; i < cate.tau_hat.size(); ++i) {
    std::vector<std::string> row{std::to_string(i + 1), cell(cate.tau_hat[i])};
    if (bounds) {
      row.push_back(cell((*cate.lower)[i]));
      row.push_back(cell((*cate.upper)[i]));
    }
    row.push_back(cate.method);
    t.rows.push_back(std::move(row));
  }
  write_csv_table(path, t);
}

namespace {

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

CateEstimate read_cate_csv(const std::string& path) {
  CsvTable t = read_csv_table(path);
  if (!t.column_index("tau_hat")) throw DataError(path + ": missing tau_hat column");
  CateEstimate c;
  c.tau_hat = to_vector(t.numeric_column("tau_hat"));
  if (t.column_index("lower") && t.column_index("upper")) {
    c.lower = to_vector(t.numeric_column("lower"));
    c.upper = to_vector(t.numeric_column("upper"));
  }
  if (auto m = t.column_index("method"); m && !t.rows.empty()) c.method = t.rows.front()[*m];
  return c;
}

void write_truth_csv(const std::string& path, const SimulatedDataset& sim) {
  CsvTable t;
  t.header = {"id", "true_tau", "true_cate", "true_e", "true_mu0"};
  for (Eigen::Index i = 0; i < sim.true_tau.size(); ++i) {
    t.rows.push_back({std::to_string(i + 1), cell(sim.true_tau[i]), cell(sim.true_cate[i]),
                      cell(sim.true_e[i]), cell(sim.true_mu0[i])});
  }
  write_csv_table(path, t);
}

Vector read_truth_tau(const std::string& path) {
  CsvTable t = read_csv_table(path);
  if (!t.column_index("true_tau")) throw DataError(path + ": missing true_tau column");
  return to_vector(t.numeric_column("true_tau"));
}

void write_sorted_effects_csv(const std::string& path, const std::vector<CateEstimate>& estimates) {
  bool bounds = false;
  for (const auto& e : estimates) bounds = bounds || (e.lower && e.upper);
  CsvTable t;
  t.header = {"method", "rank", "id", "tau_hat"};
  if (bounds) {
    t.header.push_back("lower");
    t.header.push_back("upper");
  }
  for (const auto& e : estimates) {
    for (const auto& s : sorted_effects(e)) {
      std::vector<std::string> row{e.method, std::to_string(s.rank), std::to_string(s.id + 1),
                                   cell(s.tau_hat)};
      if (bounds) {
        row.push_back(cell(s.lower));
        row.push_back(cell(s.upper));
      }
      t.rows.push_back(std::move(row));
    }
  }
  write_csv_table(path, t);
}

void write_clan_csv(const std::string& path, const std::vector<std::string>& methods,
                    const std::vector<std::vector<ClanRow>>& rows) {
  CsvTable t;
  t.header = {"method", "covariate", "mean_least", "mean_most", "difference",
              "se",     "lower",     "upper",      "p_value"};
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (const auto& r : rows[m]) {
      t.rows.push_back({methods[m], r.covariate, cell(r.mean_least), cell(r.mean_most),
                        cell(r.difference), cell(r.se), cell(r.lower), cell(r.upper), cell(r.p_value)});
    }
  }
  write_csv_table(path, t);
}

void write_correlation_csv(const std::string& path, const CorrelationMatrix& corr) {
  CsvTable t;
  t.header = {"method"};
  for (const auto& m : corr.methods) t.header.push_back(m);
  for (std::size_t a = 0; a < corr.methods.size(); ++a) {
    std::vector<std::string> row{corr.methods[a]};
    for (std::size_t b = 0; b < corr.methods.size(); ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      row.push_back(corr.defined(ia, ib) ? cell(corr.rho(ia, ib)) : "NA");
    }
    t.rows.push_back(std::move(row));
  }
  write_csv_table(path, t);
}

void write_balance_csv(const std::string& path, const std::vector<BalanceRow>& rows) {
  CsvTable t;
  t.header = {"covariate",        "mean_treated", "mean_control", "ipw_mean_treated",
              "ipw_mean_control", "smd_raw",      "smd_ipw"};
  for (const auto& r : rows) {
    t.rows.push_back({r.covariate, cell(r.mean_treated), cell(r.mean_control), cell(r.ipw_mean_treated),
                      cell(r.ipw_mean_control), cell(r.smd_raw), cell(r.smd_ipw)});
  }
  write_csv_table(path, t);
}

}  // namespace cate
