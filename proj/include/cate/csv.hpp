#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cate {

/// A parsed CSV file: one header row plus string cells. Every table the CLI
/// writes can be read back with read_csv_table.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(const std::string& name) const;
  /// Column parsed as doubles; throws DataError naming row and column on a bad cell.
  std::vector<double> numeric_column(const std::string& name) const;
};

CsvTable read_csv_table(const std::string& path);
void write_csv_table(const std::string& path, const CsvTable& table);

/// Strict double parse: decimal or scientific notation, whole cell consumed.
std::optional<double> parse_double(const std::string& cell);

/// 17 significant digits; round-trips every finite double. NaN becomes "NA".
std::string format_double(double value);

}  // namespace cate
