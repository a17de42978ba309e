#include "hfepr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace hfepr {

namespace {

int column_index(const ResultTable& table, const std::string& name) {
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    if (table.columns[c] == name) return static_cast<int>(c);
  throw std::invalid_argument("plot column not found: '" + name + "'");
}

// Tick step rounded to a 1/2/5 decade pattern.
double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(target_ticks, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double nice = 10.0;
  if (frac <= 1.0)
    nice = 1.0;
  else if (frac <= 2.0)
    nice = 2.0;
  else if (frac <= 5.0)
    nice = 5.0;
  return nice * mag;
}

std::vector<double> linear_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const double step = nice_step(hi - lo, 5);
  double t = std::ceil(lo / step) * step;
  for (; t <= hi + 1e-9 * (hi - lo); t += step) ticks.push_back(t);
  return ticks;
}

std::vector<double> decade_ticks(double lo, double hi) {
  std::vector<double> ticks;
  for (double d = std::floor(std::log10(lo)); d <= std::ceil(std::log10(hi)); ++d)
    if (std::pow(10.0, d) >= lo * (1.0 - 1e-12) &&
        std::pow(10.0, d) <= hi * (1.0 + 1e-12))
      ticks.push_back(std::pow(10.0, d));
  if (ticks.empty()) ticks = {lo, hi};
  return ticks;
}

std::string coord(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", v);
  return buffer;
}

}  // namespace

std::string render_svg(const ResultTable& table, const PlotSpec& spec) {
  if (table.rows.empty())
    throw std::invalid_argument("cannot plot an empty table");
  const int xi = column_index(table, spec.x_column);
  const int yi = column_index(table, spec.y_column);

  std::vector<std::pair<double, double>> points;
  points.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const double x = row[xi];
    const double y = row[yi];
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    if (spec.log_y && y <= 0.0) continue;
    points.emplace_back(x, y);
  }
  if (points.empty())
    throw std::invalid_argument("no plottable points for the requested columns");

  double x_min = points[0].first, x_max = x_min;
  double y_min = points[0].second, y_max = y_min;
  for (const auto& [x, y] : points) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + (y_min == 0.0 ? 1.0 : std::abs(y_min) * 0.1);

  const double margin_left = 70, margin_right = 20, margin_top = 30,
               margin_bottom = 50;
  const double plot_w = spec.width - margin_left - margin_right;
  const double plot_h = spec.height - margin_top - margin_bottom;

  const auto x_pos = [&](double x) {
    return margin_left + (x - x_min) / (x_max - x_min) * plot_w;
  };
  const auto y_pos = [&](double y) {
    const double v = spec.log_y
                         ? (std::log10(y) - std::log10(y_min)) /
                               (std::log10(y_max) - std::log10(y_min))
                         : (y - y_min) / (y_max - y_min);
    return margin_top + (1.0 - v) * plot_h;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
      << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width
      << " " << spec.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    svg << "<text x=\"" << spec.width / 2
        << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\" "
           "font-family=\"sans-serif\">"
        << spec.title << "</text>\n";

  // Frame.
  svg << "<rect x=\"" << coord(margin_left) << "\" y=\"" << coord(margin_top)
      << "\" width=\"" << coord(plot_w) << "\" height=\"" << coord(plot_h)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  const std::vector<double> x_ticks = linear_ticks(x_min, x_max);
  const std::vector<double> y_ticks =
      spec.log_y ? decade_ticks(y_min, y_max) : linear_ticks(y_min, y_max);
  for (const double t : x_ticks) {
    const double px = x_pos(t);
    svg << "<line x1=\"" << coord(px) << "\" y1=\"" << coord(margin_top + plot_h)
        << "\" x2=\"" << coord(px) << "\" y2=\""
        << coord(margin_top + plot_h + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << coord(px) << "\" y=\""
        << coord(margin_top + plot_h + 18)
        << "\" text-anchor=\"middle\" font-size=\"11\" "
           "font-family=\"sans-serif\">"
        << format_double(t) << "</text>\n";
  }
  for (const double t : y_ticks) {
    const double py = y_pos(t);
    svg << "<line x1=\"" << coord(margin_left - 5) << "\" y1=\"" << coord(py)
        << "\" x2=\"" << coord(margin_left) << "\" y2=\"" << coord(py)
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << coord(margin_left - 8) << "\" y=\"" << coord(py + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" "
           "font-family=\"sans-serif\">"
        << format_double(t) << "</text>\n";
  }

  svg << "<text x=\"" << coord(margin_left + plot_w / 2) << "\" y=\""
      << coord(spec.height - 12)
      << "\" text-anchor=\"middle\" font-size=\"12\" "
         "font-family=\"sans-serif\">"
      << spec.x_column << "</text>\n";
  svg << "<text x=\"16\" y=\"" << coord(margin_top + plot_h / 2)
      << "\" text-anchor=\"middle\" font-size=\"12\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 16 "
      << coord(margin_top + plot_h / 2) << ")\">" << spec.y_column
      << "</text>\n";

  svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" "
         "points=\"";
  for (const auto& [x, y] : points)
    svg << coord(x_pos(x)) << "," << coord(y_pos(y)) << " ";
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

void write_svg_file(const ResultTable& table, const PlotSpec& spec,
                    const std::string& path) {
  const std::string text = render_svg(table, spec);  // throws before creating
  const std::string tmp = path + ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open output file: " + tmp);
    file << text;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("failed moving output into place: " + path);
  }
}

}  // namespace hfepr
