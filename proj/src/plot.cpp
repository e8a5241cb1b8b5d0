#include "hybridrisk/plot.hpp"

#include <algorithm>
#include <cstdio>

namespace hybridrisk::plot {

namespace {

constexpr double kWidth = 560;
constexpr double kHeight = 460;
constexpr double kLeft = 70;
constexpr double kRight = 190;
constexpr double kTop = 40;
constexpr double kBottom = 60;

double px(double x) { return kLeft + x * (kWidth - kLeft - kRight); }
double py(double y) { return kHeight - kBottom - y * (kHeight - kTop - kBottom); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<metrics::CurvePoint> thin(const std::vector<metrics::CurvePoint>& pts) {
  constexpr std::size_t kMax = 2000;
  if (pts.size() <= kMax) {
    return pts;
  }
  const std::size_t step = (pts.size() + kMax - 1) / kMax;
  std::vector<metrics::CurvePoint> out;
  for (std::size_t i = 0; i < pts.size(); i += step) {
    out.push_back(pts[i]);
  }
  if (out.back().x != pts.back().x || out.back().y != pts.back().y) {
    out.push_back(pts.back());
  }
  return out;
}

}  // namespace

std::string render_svg(const Chart& chart) {
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
       num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2 - kRight / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(chart.title) + "</text>\n";
  // axes and grid
  for (int t = 0; t <= 10; t += 2) {
    const double v = t / 10.0;
    s += "<line x1=\"" + num(px(v)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(px(v)) + "\" y2=\"" +
         num(py(1)) + "\" stroke=\"#e5e5e5\"/>\n";
    s += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(v)) + "\" x2=\"" + num(px(1)) + "\" y2=\"" +
         num(py(v)) + "\" stroke=\"#e5e5e5\"/>\n";
    s += "<text x=\"" + num(px(v)) + "\" y=\"" + num(py(0) + 18) + "\" text-anchor=\"middle\">" +
         num(v).substr(0, 3) + "</text>\n";
    s += "<text x=\"" + num(px(0) - 8) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\">" +
         num(v).substr(0, 3) + "</text>\n";
  }
  s += "<rect x=\"" + num(px(0)) + "\" y=\"" + num(py(1)) + "\" width=\"" + num(px(1) - px(0)) +
       "\" height=\"" + num(py(0) - py(1)) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num((px(0) + px(1)) / 2) + "\" y=\"" + num(kHeight - 18) +
       "\" text-anchor=\"middle\">" + escape(chart.x_label) + "</text>\n";
  s += "<text transform=\"translate(20," + num((py(0) + py(1)) / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(chart.y_label) + "</text>\n";

  if (chart.diagonal) {
    s += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(px(1)) + "\" y2=\"" +
         num(py(1)) + "\" stroke=\"#888\" stroke-dasharray=\"4 4\"/>\n";
  }
  double legend_y = kTop + 10;
  const double legend_x = px(1) + 14;
  if (chart.baseline) {
    const double b = *chart.baseline;
    s += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(b)) + "\" x2=\"" + num(px(1)) + "\" y2=\"" +
         num(py(b)) + "\" stroke=\"#888\" stroke-dasharray=\"6 3\"/>\n";
    s += "<line x1=\"" + num(legend_x) + "\" y1=\"" + num(legend_y) + "\" x2=\"" + num(legend_x + 20) +
         "\" y2=\"" + num(legend_y) + "\" stroke=\"#888\" stroke-dasharray=\"6 3\"/>\n";
    s += "<text x=\"" + num(legend_x + 26) + "\" y=\"" + num(legend_y + 4) + "\">" +
         escape(chart.baseline_label) + "</text>\n";
    legend_y += 20;
  }
  for (const auto& series : chart.series) {
    const auto pts = thin(series.points);
    if (series.markers) {
      for (const auto& p : pts) {
        s += "<circle cx=\"" + num(px(p.x)) + "\" cy=\"" + num(py(p.y)) + "\" r=\"3.5\" fill=\"" +
             series.color + "\"/>\n";
      }
    } else {
      s += "<polyline fill=\"none\" stroke=\"" + series.color + "\" stroke-width=\"1.8\"";
      if (series.dashed) {
        s += " stroke-dasharray=\"5 3\"";
      }
      s += " points=\"";
      for (const auto& p : pts) {
        s += num(px(p.x)) + "," + num(py(p.y)) + " ";
      }
      s += "\"/>\n";
    }
    s += "<line x1=\"" + num(legend_x) + "\" y1=\"" + num(legend_y) + "\" x2=\"" + num(legend_x + 20) +
         "\" y2=\"" + num(legend_y) + "\" stroke=\"" + series.color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(legend_x + 26) + "\" y=\"" + num(legend_y + 4) + "\">" +
         escape(series.label) + "</text>\n";
    legend_y += 20;
  }
  s += "</svg>\n";
  return s;
}

}  // namespace hybridrisk::plot
