#include "lwqos/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace lwqos {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v) const {
    const double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo))
                         : (v - lo) / (hi - lo);
    return t;
  }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

Axis fit_axis(const std::vector<Series>& series, bool use_x, bool log) {
  Axis axis;
  axis.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) {
    lo = log ? 1.0 : 0.0;
    hi = log ? 10.0 : 1.0;
  }
  if (!log && lo > 0.0 && lo < 0.5 * hi) lo = 0.0;
  if (hi <= lo) hi = log ? lo * 10.0 : lo + 1.0;
  axis.lo = lo;
  axis.hi = hi;
  return axis;
}

}  // namespace

std::string render_line_chart(const ChartSpec& spec, const std::vector<Series>& series) {
  const Axis ax = fit_axis(series, true, spec.log_x);
  const Axis ay = fit_axis(series, false, spec.log_y);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.map(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.map(v)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(spec.title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 4; ++k) {
    const double t = k / 4.0;
    const double xv = ax.log ? std::pow(10.0, std::log10(ax.lo) + t * (std::log10(ax.hi) -
                                                                         std::log10(ax.lo)))
                             : ax.lo + t * (ax.hi - ax.lo);
    const double yv = ay.log ? std::pow(10.0, std::log10(ay.lo) + t * (std::log10(ay.hi) -
                                                                         std::log10(ay.lo)))
                             : ay.lo + t * (ay.hi - ay.lo);
    const double gx = kLeft + t * pw;
    const double gy = kTop + (1.0 - t) * ph;
    svg << "<line x1=\"" << gx << "\" y1=\"" << kTop << "\" x2=\"" << gx << "\" y2=\""
        << kTop + ph << "\" stroke=\"#ddd\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << gy << "\" x2=\"" << kLeft + pw << "\" y2=\""
        << gy << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << gx << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
        << tick_label(xv) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
        << tick_label(yv) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 18
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << kTop + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const Series& ser = series[s];
    const char* color = kPalette[s % kPalette.size()];
    std::ostringstream path;
    bool pen_down = false;
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (!ax.usable(ser.x[i]) || !ay.usable(ser.y[i])) {
        pen_down = false;
        continue;
      }
      const double yv = std::clamp(ser.y[i], ay.lo, ay.hi);
      path << (pen_down ? " L " : " M ") << px(ser.x[i]) << ' ' << py(yv);
      pen_down = true;
      if (ser.markers) {
        svg << "<circle cx=\"" << px(ser.x[i]) << "\" cy=\"" << py(yv) << "\" r=\"3\" fill=\""
            << color << "\"/>\n";
      }
    }
    svg << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\"" << (ser.dashed ? " stroke-dasharray=\"6 4\"" : "")
        << "/>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << kLeft + pw + 34 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"1.8\"" << (ser.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    svg << "<text x=\"" << kLeft + pw + 40 << "\" y=\"" << ly << "\">" << escape(ser.name)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace lwqos
