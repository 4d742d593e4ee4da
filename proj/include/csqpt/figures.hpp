// Copyright 2026 The csqpt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CSQPT_FIGURES_HPP
#define CSQPT_FIGURES_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "csqpt/io.hpp"
#include "csqpt/metrics.hpp"

// Static vector-graphics output: grouped bar charts of the diagonal tensor
// elements E^{mm}_{kk}, one panel per tensor, theory and estimate side by
// side.  Values are taken verbatim from the diagonal tables.

namespace csqpt {

struct DiagPanel {
  std::string title;
  int dim_in = 0;
  int dim_out = 0;
  std::vector<DiagRow> rows;
};

#ifndef CSQPT_DOXYGEN_INTERNAL
namespace detail {

inline void svg_panel(std::ostream& out, const DiagPanel& panel, double x0, double y0,
                      double width, double height, double vmax) {
  const double label_h = 18.0, axis_h = 16.0;
  const double plot_h = height - label_h - axis_h;
  const int groups = panel.dim_in;
  const int bars = panel.dim_out;
  const double group_w = width / groups;
  const double bar_w = group_w / (bars + 1);

  out << "<text x=\"" << x0 + width / 2 << "\" y=\"" << y0 + 12
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
      << panel.title << "</text>\n";
  const double base_y = y0 + label_h + plot_h;
  out << "<line x1=\"" << x0 << "\" y1=\"" << base_y << "\" x2=\"" << x0 + width << "\" y2=\""
      << base_y << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  for (const auto& row : panel.rows) {
    const double h = std::clamp(row.value / vmax, -1.0, 1.0) * plot_h;
    const double bx = x0 + row.m * group_w + row.k * bar_w;
    const double hue = 200.0 + 120.0 * row.k / std::max(1, bars - 1);
    if (h >= 0.0)
      out << "<rect x=\"" << bx << "\" y=\"" << base_y - h << "\" width=\"" << bar_w * 0.9
          << "\" height=\"" << h << "\" fill=\"hsl(" << hue << ",60%,50%)\"/>\n";
    else
      out << "<rect x=\"" << bx << "\" y=\"" << base_y << "\" width=\"" << bar_w * 0.9
          << "\" height=\"" << -h << "\" fill=\"hsl(" << hue << ",60%,35%)\"/>\n";
  }
  for (int m = 0; m < groups; ++m)
    out << "<text x=\"" << x0 + (m + 0.4) * group_w << "\" y=\"" << base_y + 13
        << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">m=" << m
        << "</text>\n";
}

}  // namespace detail
#endif

inline void save_diag_figure(const std::string& path, const std::vector<DiagPanel>& panels) {
  if (panels.empty()) throw ConfigError("save_diag_figure: no panels");
  double vmax = 0.0;
  for (const auto& p : panels)
    for (const auto& r : p.rows) vmax = std::max(vmax, std::abs(r.value));
  if (vmax <= 0.0) vmax = 1.0;

  const double panel_w = 420.0, panel_h = 200.0, margin = 20.0;
  const double width = panel_w + 2 * margin;
  const double height = panels.size() * (panel_h + margin) + margin;

  auto out = detail::open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i)
    detail::svg_panel(out, panels[i], margin, margin + i * (panel_h + margin), panel_w, panel_h,
                      vmax);
  out << "</svg>\n";
}

// Simple polyline chart for fidelity-versus-cutoff curves.
struct CurveSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

inline void save_curve_figure(const std::string& path, const std::string& title,
                              const std::vector<CurveSeries>& series) {
  const double w = 480.0, h = 320.0, m = 45.0;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i]);
      ymax = std::max(ymax, s.ys[i]);
    }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto map_x = [&](double x) { return m + (x - xmin) / (xmax - xmin) * (w - 2 * m); };
  auto map_y = [&](double y) { return h - m - (y - ymin) / (ymax - ymin) * (h - 2 * m); };

  auto out = detail::open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";
  out << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m
      << "\" stroke=\"black\"/>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[s % 5] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].xs.size(); ++i)
      out << map_x(series[s].xs[i]) << "," << map_y(series[s].ys[i]) << " ";
    out << "\"/>\n";
    out << "<text x=\"" << w - m - 4 << "\" y=\"" << m + 14 * (s + 1)
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << colors[s % 5]
        << "\" font-family=\"sans-serif\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace csqpt

#endif  // CSQPT_FIGURES_HPP
