#include "lwqos/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace lwqos {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("format_number: to_chars failed");
  return std::string(buf, ptr);
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double CsvTable::number(std::size_t row, int col) const {
  if (col < 0 || row >= rows.size() || static_cast<std::size_t>(col) >= rows[row].size()) {
    throw std::out_of_range("csv: cell out of range");
  }
  const std::string& cell = rows[row][col];
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') {
    throw std::invalid_argument("csv: '" + cell + "' in column " + header[col] +
                                " is not a number");
  }
  return v;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  auto split = [](std::string_view line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      out.emplace_back(line.substr(pos, comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return out;
  };
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    if (line.empty()) continue;
    if (first) {
      table.header = split(line);
      first = false;
      continue;
    }
    auto row = split(line);
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("csv: row " + std::to_string(table.rows.size() + 1) +
                                  " has " + std::to_string(row.size()) + " fields, header has " +
                                  std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (first) throw std::invalid_argument("csv: empty input");
  return table;
}

}  // namespace lwqos
