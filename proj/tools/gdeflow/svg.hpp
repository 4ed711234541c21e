#pragma once

#include <string>
#include <vector>

namespace gde::cli {

/// Minimal SVG line-plot writer: axes with ticks, optional shaded bands
/// (min/max or mean +- std), and a legend. Axes auto-scale to the data.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band_lo;  // optional, same length as x
  std::vector<double> band_hi;
  std::string color;  // css color; cycled when empty
  bool dashed = false;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 760;
  int height = 420;
};

void write_svg(const LinePlot& plot, const std::string& path);

}  // namespace gde::cli
