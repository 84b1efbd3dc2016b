#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "incrlearn/benchmark.hpp"
#include "incrlearn/errors.hpp"

namespace incrlearn {

/// Minimal deterministic SVG emitters for accuracy curves and confusion
/// heatmaps. No external plotting dependency.

struct SvgSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline const char* series_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace detail

/// Line chart with axes, ticks and a legend. y range is clamped to [0, 1]
/// padding included, which fits accuracy curves.
inline void write_line_chart(const std::string& path, const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<SvgSeries>& series) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open SVG output: " + path);

  const double width = 640, height = 420;
  const double left = 64, right = 24, top = 40, bottom = 48;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double x_min = 0.0, x_max = 1.0;
  bool have_points = false;
  for (const SvgSeries& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!have_points) {
        x_min = x_max = x;
        have_points = true;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
  }
  if (!have_points) x_min = 0.0, x_max = 1.0;
  if (x_max == x_min) x_max = x_min + 1.0;
  const double y_min = 0.0, y_max = 1.0;

  auto px = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * plot_w;
  };
  auto py = [&](double y) {
    return top + (y_max - y) / (y_max - y_min) * plot_h;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-size=\"15\">" << title << "</text>\n";

  // Axes box and ticks.
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#444444\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = y_min + (y_max - y_min) * i / 5.0;
    out << "<line x1=\"" << left - 4 << "\" y1=\"" << detail::svg_num(py(y))
        << "\" x2=\"" << left << "\" y2=\"" << detail::svg_num(py(y))
        << "\" stroke=\"#444444\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\""
        << detail::svg_num(py(y) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << detail::svg_num(y)
        << "</text>\n";
  }
  const int x_ticks = std::min(10, static_cast<int>(x_max - x_min));
  for (int i = 0; i <= std::max(1, x_ticks); ++i) {
    const double x =
        x_min + (x_max - x_min) * i / std::max(1, x_ticks);
    out << "<line x1=\"" << detail::svg_num(px(x)) << "\" y1=\""
        << top + plot_h << "\" x2=\"" << detail::svg_num(px(x)) << "\" y2=\""
        << top + plot_h + 4 << "\" stroke=\"#444444\"/>\n";
    char label[32];
    std::snprintf(label, sizeof(label), "%g", x);
    out << "<text x=\"" << detail::svg_num(px(x)) << "\" y=\""
        << top + plot_h + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << label << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << top + plot_h / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 "
      << 16 << ' ' << top + plot_h / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    if (series[s].points.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << detail::series_color(s)
        << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[s].points) {
      out << detail::svg_num(px(x)) << ',' << detail::svg_num(py(y)) << ' ';
    }
    out << "\"/>\n";
    for (const auto& [x, y] : series[s].points) {
      out << "<circle cx=\"" << detail::svg_num(px(x)) << "\" cy=\""
          << detail::svg_num(py(y)) << "\" r=\"2.5\" fill=\""
          << detail::series_color(s) << "\"/>\n";
    }
    const double ly = top + 16 + 16 * static_cast<double>(s);
    out << "<line x1=\"" << left + plot_w - 120 << "\" y1=\"" << ly
        << "\" x2=\"" << left + plot_w - 96 << "\" y2=\"" << ly
        << "\" stroke=\"" << detail::series_color(s)
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + plot_w - 90 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\">" << series[s].name << "</text>\n";
  }
  out << "</svg>\n";
}

/// Confusion heatmap. Cell intensity is log(1 + count) scaled by the
/// maximum cell, rendered as a white-to-blue ramp.
inline void write_confusion_heatmap(const std::string& path,
                                    const std::string& title,
                                    const ConfusionMatrix& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open SVG output: " + path);
  const int t = m.num_classes;
  const double cell = std::max(6.0, std::min(28.0, 360.0 / std::max(1, t)));
  const double left = 70, top = 56;
  const double grid = cell * t;
  const double width = left + grid + 30;
  const double height = top + grid + 50;

  double max_log = 0.0;
  for (long c : m.counts) {
    max_log = std::max(max_log, std::log1p(static_cast<double>(c)));
  }

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << title << "</text>\n";
  for (int y = 1; y <= t; ++y) {
    for (int p = 1; p <= t; ++p) {
      const double v =
          max_log > 0.0
              ? std::log1p(static_cast<double>(m.at(y, p))) / max_log
              : 0.0;
      const int shade = static_cast<int>(255.0 * (1.0 - v));
      char color[16];
      std::snprintf(color, sizeof(color), "#%02x%02xff", shade, shade);
      out << "<rect x=\"" << detail::svg_num(left + cell * (p - 1))
          << "\" y=\"" << detail::svg_num(top + cell * (y - 1))
          << "\" width=\"" << detail::svg_num(cell) << "\" height=\""
          << detail::svg_num(cell) << "\" fill=\"" << color << "\"/>\n";
    }
  }
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << grid
      << "\" height=\"" << grid << "\" fill=\"none\" stroke=\"#444444\"/>\n";
  const int step = std::max(1, t / 10);
  for (int y = 1; y <= t; y += step) {
    out << "<text x=\"" << left - 6 << "\" y=\""
        << detail::svg_num(top + cell * (y - 0.5) + 4)
        << "\" text-anchor=\"end\" font-size=\"10\">" << y << "</text>\n";
    out << "<text x=\"" << detail::svg_num(left + cell * (y - 0.5))
        << "\" y=\"" << detail::svg_num(top + grid + 14)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << y << "</text>\n";
  }
  out << "<text x=\"" << left + grid / 2 << "\" y=\""
      << detail::svg_num(top + grid + 34)
      << "\" text-anchor=\"middle\" font-size=\"12\">predicted class"
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << top + grid / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 "
      << 18 << ' ' << top + grid / 2 << ")\">true class</text>\n";
  out << "</svg>\n";
}

}  // namespace incrlearn
