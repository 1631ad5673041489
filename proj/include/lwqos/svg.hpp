#pragma once

#include <string>
#include <vector>

namespace lwqos {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  bool markers = false;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = true;
  bool log_y = false;
};

/// Minimal line chart. Non-finite points are skipped.
std::string render_line_chart(const ChartSpec& spec, const std::vector<Series>& series);

}  // namespace lwqos
