#include "unisyn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace unisyn {

namespace {

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                    "#59a14f", "#edc948", "#b07aa1", "#ff9da7"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_bar_chart_svg(const MetricsReport& report, PlotMetric metric) {
  const bool is_psnr = metric == PlotMetric::kPsnr;
  const auto value = [&](const CellStats& c) { return is_psnr ? c.psnr_mean : c.ssim_mean; };
  const auto spread = [&](const CellStats& c) { return is_psnr ? c.psnr_std : c.ssim_std; };

  double top = is_psnr ? 0.0 : 1.0;
  for (const auto& row : report.rows)
    for (const auto& cell : row.cells)
      if (cell && std::isfinite(value(*cell))) top = std::max(top, value(*cell) + spread(*cell));
  if (is_psnr) top = std::ceil(top / 5.0) * 5.0 + 5.0;

  const int M = static_cast<int>(report.modality_names.size());
  const double bar = 10.0, gap = 14.0, left = 60.0, plot_h = 260.0, base = 40.0 + plot_h;
  const double group_w = bar * std::max(1, M - 1) + gap;
  const double width = left + group_w * static_cast<double>(report.rows.size()) + 140.0;
  const double height = base + 70.0;
  auto y_of = [&](double v) { return base - plot_h * std::clamp(v / top, 0.0, 1.0); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  svg << "<text x=\"" << num(left) << "\" y=\"20\" font-size=\"13\">" << (is_psnr ? "PSNR (dB)" : "SSIM")
      << " per availability configuration</text>\n";
  svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(base) << "\" x2=\"" << num(width - 130.0)
      << "\" y2=\"" << num(base) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(base - plot_h) << "\" x2=\"" << num(left)
      << "\" y2=\"" << num(base) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = top * t / 5.0;
    svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y_of(v) + 3) << "\" text-anchor=\"end\">"
        << num(v) << "</text>\n";
  }
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    const auto& row = report.rows[r];
    double x = left + gap / 2 + group_w * static_cast<double>(r);
    for (int i = 0; i < M; ++i) {
      const auto& cell = row.cells[static_cast<std::size_t>(i)];
      if (!cell || !std::isfinite(value(*cell))) continue;
      const double y = y_of(value(*cell));
      svg << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(bar - 1) << "\" height=\""
          << num(base - y) << "\" fill=\"" << kPalette[i % 8] << "\"><title>" << row.condition.to_string()
          << ' ' << report.modality_names[static_cast<std::size_t>(i)] << ": " << value(*cell)
          << "</title></rect>\n";
      const double cx = x + (bar - 1) / 2;
      svg << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y_of(value(*cell) + spread(*cell)))
          << "\" x2=\"" << num(cx) << "\" y2=\"" << num(y_of(value(*cell) - spread(*cell)))
          << "\" stroke=\"black\"/>\n";
      x += bar;
    }
    svg << "<text x=\"" << num(left + gap / 2 + group_w * static_cast<double>(r)) << "\" y=\""
        << num(base + 14) << "\" transform=\"rotate(45 " << num(left + gap / 2 + group_w * static_cast<double>(r))
        << ' ' << num(base + 14) << ")\">" << row.condition.to_string() << "</text>\n";
  }
  for (int i = 0; i < M; ++i) {
    const double ly = 50.0 + 16.0 * i;
    svg << "<rect x=\"" << num(width - 120) << "\" y=\"" << num(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[i % 8] << "\"/><text x=\"" << num(width - 105) << "\" y=\"" << num(ly) << "\">"
        << report.modality_names[static_cast<std::size_t>(i)] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace unisyn
