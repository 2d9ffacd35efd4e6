#include "cli/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lorentzscope::cli {

namespace {

constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 28.0;
constexpr double kBottom = 42.0;

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  void settle() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

// Roughly five round tick values across [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

std::string tick_label(double v) {
  if (std::abs(v) >= 1e5 || (v != 0.0 && std::abs(v) < 1e-3)) return fmt::format("{:.2g}", v);
  std::string s = fmt::format("{:.3f}", v);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

void render_panel(std::string& out, const Panel& panel, double y0, double width, double height) {
  Range xr;
  Range yr;
  for (const auto& line : panel.lines) {
    for (double v : line.x) xr.add(v);
    for (double v : line.y) yr.add(v);
  }
  if (panel.bars) {
    for (double e : panel.bars->edges) xr.add(e);
    for (double d : panel.bars->density) yr.add(d);
    yr.add(0.0);
  }
  xr.settle();
  yr.settle();
  const double pad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= panel.bars ? 0.0 : pad;
  yr.hi += pad;

  const double pw = width - kLeft - kRight;
  const double ph = height - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return y0 + kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  out += fmt::format("<g>\n<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"13\" font-weight=\"bold\">{}</text>\n",
                     kLeft, y0 + 18.0, escape(panel.title));
  out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#999\"/>\n",
                     kLeft, y0 + kTop, pw, ph);
  for (double t : ticks(xr.lo, xr.hi)) {
    out += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"#999\"/>"
                       "<text x=\"{0:.1f}\" y=\"{3:.1f}\" font-size=\"10\" text-anchor=\"middle\">{4}</text>\n",
                       sx(t), y0 + kTop + ph, y0 + kTop + ph + 4.0, y0 + kTop + ph + 15.0, tick_label(t));
  }
  for (double t : ticks(yr.lo, yr.hi)) {
    out += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"#999\"/>"
                       "<text x=\"{3:.1f}\" y=\"{4:.1f}\" font-size=\"10\" text-anchor=\"end\">{5}</text>\n",
                       kLeft - 4.0, sy(t), kLeft, kLeft - 6.0, sy(t) + 3.0, tick_label(t));
  }
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + pw / 2.0, y0 + height - 8.0, escape(panel.x_label));
  out += fmt::format(
      "<text x=\"14\" y=\"{0:.1f}\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0:.1f})\">{1}</text>\n",
      y0 + kTop + ph / 2.0, escape(panel.y_label));

  if (panel.bars) {
    const auto& h = *panel.bars;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double top = sy(h.density[i]);
      out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"#b8cce4\" stroke=\"#4f6d8f\"/>\n",
                         sx(h.edges[i]), top, sx(h.edges[i + 1]) - sx(h.edges[i]), sy(0.0) - top);
    }
  }

  double legend_y = y0 + kTop + 14.0;
  for (const auto& line : panel.lines) {
    if (line.markers) {
      for (std::size_t i = 0; i < line.x.size() && i < line.y.size(); ++i) {
        if (!std::isfinite(line.y[i])) continue;
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", sx(line.x[i]), sy(line.y[i]),
                           line.color);
      }
    } else {
      std::string points;
      for (std::size_t i = 0; i < line.x.size() && i < line.y.size(); ++i) {
        if (!std::isfinite(line.y[i])) continue;
        points += fmt::format("{:.2f},{:.2f} ", sx(line.x[i]), sy(line.y[i]));
      }
      if (!points.empty()) points.pop_back();
      out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"{} points=\"{}\"/>\n", line.color,
                         line.dashed ? " stroke-dasharray=\"5,3\"" : "", points);
    }
    if (!line.label.empty()) {
      out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"10\" text-anchor=\"end\" fill=\"{}\">{}</text>\n",
                         kLeft + pw - 6.0, legend_y, line.color, escape(line.label));
      legend_y += 13.0;
    }
  }
  out += "</g>\n";
}

}  // namespace

std::string render_figure(std::span<const Panel> panels, std::string_view comment, double width,
                          double panel_height) {
  const double height = panel_height * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
      "font-family=\"sans-serif\">\n",
      width, height);
  if (!comment.empty()) out += fmt::format("<!-- {} -->\n", escape(comment));
  out += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", width, height);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    render_panel(out, panels[i], panel_height * static_cast<double>(i), width, panel_height);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace lorentzscope::cli
