// Standalone SVG line plots of result tables (no external assets).

#pragma once

#include <string>

#include "hfepr/table.hpp"

namespace hfepr {

struct PlotSpec {
  std::string x_column;
  std::string y_column;
  bool log_y = false;
  std::string title;
  int width = 720;
  int height = 480;
};

// Throws std::invalid_argument when the table is empty or a named
// column does not exist (the message names the column).
std::string render_svg(const ResultTable& table, const PlotSpec& spec);

void write_svg_file(const ResultTable& table, const PlotSpec& spec,
                    const std::string& path);

}  // namespace hfepr
