#pragma once

#include <string>
#include <vector>

#include "lqrm/experiment.hpp"

namespace lqrm::figures {

// White cells for structurally-zero entries, filled cells otherwise.
std::string sparsity_grid_svg(const SparsityReport& report);
std::string sparsity_grid_ascii(const SparsityReport& report);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

// Minimal line plot (log-x optional), axes with a handful of ticks.
std::string line_plot_svg(const std::vector<Series>& series, const std::string& x_label,
                          const std::string& y_label, bool log_x = false);

}  // namespace lqrm::figures
