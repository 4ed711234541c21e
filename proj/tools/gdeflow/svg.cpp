#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace gde::cli {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void take(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad() {
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    } else {
      const double m = 0.05 * (hi - lo);
      lo -= m;
      hi += m;
    }
  }
};

double nice_step(double span) {
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2 * mag;
  if (r < 7.5) return 5 * mag;
  return 10 * mag;
}

}  // namespace

void write_svg(const LinePlot& plot, const std::string& path) {
  if (plot.series.empty()) throw std::invalid_argument("write_svg: no series");
  Range rx, ry;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("write_svg: x/y length mismatch");
    for (double v : s.x) rx.take(v);
    for (double v : s.y) ry.take(v);
    for (double v : s.band_lo) ry.take(v);
    for (double v : s.band_hi) ry.take(v);
  }
  rx.pad();
  ry.pad();

  const double ml = 62, mr = 16, mt = 34, mb = 46;
  const double pw = plot.width - ml - mr;
  const double ph = plot.height - mt - mb;
  const auto px = [&](double v) { return ml + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  const auto py = [&](double v) { return mt + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_svg: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
      << plot.height << "\" viewBox=\"0 0 " << plot.width << " " << plot.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << plot.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << plot.title << "</text>\n";

  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
  const double sx = nice_step(rx.hi - rx.lo);
  for (double v = std::ceil(rx.lo / sx) * sx; v <= rx.hi + 1e-12; v += sx) {
    out << "<line x1=\"" << px(v) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(v) << "\" y2=\""
        << mt + ph + 4 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(v) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(v)
        << "</text>\n";
  }
  const double sy = nice_step(ry.hi - ry.lo);
  for (double v = std::ceil(ry.lo / sy) * sy; v <= ry.hi + 1e-12; v += sy) {
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(v) << "\" x2=\"" << ml << "\" y2=\""
        << py(v) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 7 << "\" y=\"" << py(v) + 3
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(v)
        << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << py(v) << "\" x2=\"" << ml + pw << "\" y2=\""
        << py(v) << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << plot.height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << plot.x_label
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">" << plot.y_label << "</text>\n";

  // bands first, lines on top
  int color_idx = 0;
  for (const auto& s : plot.series) {
    const std::string color =
        s.color.empty() ? kPalette[color_idx++ % 8] : s.color;
    if (!s.band_lo.empty() && s.band_lo.size() == s.x.size() && s.band_hi.size() == s.x.size()) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << px(s.x[i]) << "," << py(s.band_hi[i]) << " ";
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        out << px(s.x[i]) << "," << py(s.band_lo[i]) << " ";
      }
      out << "\"/>\n";
    }
  }
  color_idx = 0;
  for (const auto& s : plot.series) {
    const std::string color =
        s.color.empty() ? kPalette[color_idx++ % 8] : s.color;
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
    if (s.dashed) out << " stroke-dasharray=\"5,3\"";
    out << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    out << "\"/>\n";
  }

  // legend
  double ly = mt + 6;
  color_idx = 0;
  for (const auto& s : plot.series) {
    const std::string color =
        s.color.empty() ? kPalette[color_idx++ % 8] : s.color;
    if (s.label.empty()) continue;
    out << "<line x1=\"" << ml + pw - 130 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw - 110
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (s.dashed) out << " stroke-dasharray=\"5,3\"";
    out << "/>\n";
    out << "<text x=\"" << ml + pw - 105 << "\" y=\"" << ly + 3
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
    ly += 15;
  }
  out << "</svg>\n";
}

}  // namespace gde::cli
