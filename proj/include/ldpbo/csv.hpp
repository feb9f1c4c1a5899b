#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ldpbo {

/// Numeric table with a header row of column labels.
struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t columns() const { return header.size(); }
};

/// Reads a UTF-8 CSV whose first row holds labels and whose remaining rows are
/// numeric. Throws IngestionError naming the offending row/column.
NumericTable read_numeric_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal representation (deterministic).
std::string format_double(double value);

}  // namespace ldpbo
