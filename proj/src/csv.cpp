#include "ldpbo/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ldpbo/errors.hpp"

namespace ldpbo {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open CSV file: " + path.string());

  NumericTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw IngestionError(path.string() + ": line " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(table.header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto& c = cells[j];
      const char* end = c.data() + c.size();
      auto [ptr, ec] = std::from_chars(c.data(), end, row[j]);
      if (c.empty() || ec != std::errc{} || ptr != end || !std::isfinite(row[j])) {
        throw IngestionError(path.string() + ": non-numeric cell '" + c + "' at line " +
                             std::to_string(line_no) + ", column '" + table.header[j] + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw IngestionError(path.string() + ": empty CSV file");
  return table;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace ldpbo
