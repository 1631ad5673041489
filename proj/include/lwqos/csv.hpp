#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lwqos {

/// Shortest round-trip text for a double ("inf", "nan" for non-finite).
std::string format_number(double value);

/// Plain comma-separated table (no quoting; fields never contain commas).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index, or -1.
  int column(std::string_view name) const;
  double number(std::size_t row, int column) const;
};

CsvTable parse_csv(std::string_view text);

}  // namespace lwqos
