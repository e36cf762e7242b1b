#include "figures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lqrm::figures {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string sparsity_grid_svg(const SparsityReport& report) {
  const Eigen::Index rows = report.pattern.rows(), cols = report.pattern.cols();
  const int cell = 12, pad = 4;
  const int width = pad * 2 + cell * static_cast<int>(cols);
  const int height = pad * 2 + cell * static_cast<int>(rows);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const char* fill = report.pattern(i, j) ? "#ffffff" : "#1f3d7a";
      svg << "<rect x=\"" << pad + cell * j << "\" y=\"" << pad + cell * i << "\" width=\""
          << cell << "\" height=\"" << cell << "\" fill=\"" << fill
          << "\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n";
    }
  svg << "</svg>\n";
  return svg.str();
}

std::string sparsity_grid_ascii(const SparsityReport& report) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < report.pattern.rows(); ++i) {
    for (Eigen::Index j = 0; j < report.pattern.cols(); ++j)
      out << (report.pattern(i, j) ? '.' : '#');
    out << '\n';
  }
  return out.str();
}

std::string line_plot_svg(const std::vector<Series>& series, const std::string& x_label,
                          const std::string& y_label, bool log_x) {
  const int width = 480, height = 320, ml = 64, mr = 16, mt = 16, mb = 44;
  const double plot_w = width - ml - mr, plot_h = height - mt - mb;
  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double xv = log_x ? std::log10(std::max(s.x[i], 1e-300)) : s.x[i];
      x_min = std::min(x_min, xv);
      x_max = std::max(x_max, xv);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  if (x_min > x_max) {
    x_min = 0;
    x_max = 1;
  }
  if (y_min > y_max) {
    y_min = 0;
    y_max = 1;
  }
  if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
  if (y_max - y_min < 1e-12) y_max = y_min + 1.0;
  auto px = [&](double x) {
    const double xv = log_x ? std::log10(std::max(x, 1e-300)) : x;
    return ml + (xv - x_min) / (x_max - x_min) * plot_w;
  };
  auto py = [&](double y) { return mt + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x_min + (x_max - x_min) * t / 4.0;
    const double fy = y_min + (y_max - y_min) * t / 4.0;
    const double gx = ml + plot_w * t / 4.0;
    const double gy = mt + plot_h * (1.0 - t / 4.0);
    svg << "<line x1=\"" << gx << "\" y1=\"" << mt + plot_h << "\" x2=\"" << gx << "\" y2=\""
        << mt + plot_h + 4 << "\" stroke=\"#333333\"/>\n"
        << "<text x=\"" << gx << "\" y=\"" << mt + plot_h + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">"
        << fmt(log_x ? std::pow(10.0, fx) : fx) << "</text>\n"
        << "<line x1=\"" << ml - 4 << "\" y1=\"" << gy << "\" x2=\"" << ml << "\" y2=\"" << gy
        << "\" stroke=\"#333333\"/>\n"
        << "<text x=\"" << ml - 6 << "\" y=\"" << gy + 3
        << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
  }
  svg << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 8
      << "\" font-size=\"12\" text-anchor=\"middle\">" << x_label << "</text>\n"
      << "<text x=\"14\" y=\"" << mt + plot_h / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << mt + plot_h / 2 << ")\">" << y_label << "</text>\n";
  int color = 0;
  for (const auto& s : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << colors[color % 5]
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg << px(s.x[i]) << "," << py(s.y[i]) << " ";
    svg << "\"/>\n";
    if (!s.label.empty())
      svg << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 14 + 14 * color
          << "\" font-size=\"11\" fill=\"" << colors[color % 5] << "\">" << s.label
          << "</text>\n";
    ++color;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace lqrm::figures
