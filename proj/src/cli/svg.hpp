#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lorentzscope/stats.hpp"

namespace lorentzscope::cli {

struct Line {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f4e79";
  bool dashed = false;
  // Draw as unconnected markers instead of a polyline.
  bool markers = false;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Line> lines;
  std::optional<Histogram> bars;
};

// Stacked panels sharing one SVG document. Output depends only on the
// inputs, with coordinates printed at fixed precision.
std::string render_figure(std::span<const Panel> panels, std::string_view comment, double width = 820.0,
                          double panel_height = 240.0);

}  // namespace lorentzscope::cli
