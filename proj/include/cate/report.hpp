#pragma once

#include <string>
#include <vector>

#include "cate/inference.hpp"
#include "cate/metalearners.hpp"
#include "cate/simulation.hpp"

namespace cate {

/// Numeric cell text; "NA" for NaN.
std::string cell(double value);

/// id, tau_hat, [lower, upper,] method. Bound columns appear only when the
/// estimate carries intervals.
void write_cate_csv(const std::string& path, const CateEstimate& cate);
CateEstimate read_cate_csv(const std::string& path);

/// id, true_tau, true_cate, true_e, true_mu0.
void write_truth_csv(const std::string& path, const SimulatedDataset& sim);
/// The true_tau column of a truth file.
Vector read_truth_tau(const std::string& path);

void write_sorted_effects_csv(const std::string& path, const std::vector<CateEstimate>& estimates);
void write_clan_csv(const std::string& path, const std::vector<std::string>& methods,
                    const std::vector<std::vector<ClanRow>>& rows);
void write_correlation_csv(const std::string& path, const CorrelationMatrix& corr);
void write_balance_csv(const std::string& path, const std::vector<BalanceRow>& rows);

}  // namespace cate
