#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hybridrisk/metrics.hpp"

namespace hybridrisk::plot {

struct Series {
  std::string label;
  std::vector<metrics::CurvePoint> points;
  std::string color = "#1f77b4";
  bool dashed = false;
  /// Draw markers instead of a polyline (reliability diagrams).
  bool markers = false;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Dashed identity line from (0,0) to (1,1).
  bool diagonal = false;
  /// Horizontal reference line, e.g. a PR baseline.
  std::optional<double> baseline;
  std::string baseline_label;
};

/// Static SVG rendering on the unit square. Long series are thinned to at
/// most ~2000 vertices.
std::string render_svg(const Chart& chart);

}  // namespace hybridrisk::plot
