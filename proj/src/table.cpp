#include "hfepr/table.hpp"

#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hfepr {

void ResultTable::add_row(std::initializer_list<double> values) {
  rows.emplace_back(values);
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

std::string to_csv(const ResultTable& table) {
  const bool has_labels = !table.label_column_name.empty();
  for (const auto& row : table.rows)
    if (row.size() != table.columns.size())
      throw std::invalid_argument("ragged result table");
  if (has_labels && table.labels.size() != table.rows.size())
    throw std::invalid_argument("label column length mismatch");

  bool any_nonfinite = false;
  for (const auto& row : table.rows)
    for (const double v : row) any_nonfinite |= !std::isfinite(v);

  std::ostringstream out;
  if (!table.version.empty()) out << "# hfepr_version=" << table.version << "\n";
  if (!table.config_hash.empty())
    out << "# config_hash=" << table.config_hash << "\n";
  out << "# seed=" << table.seed << "\n";
  for (const auto& w : table.warnings) out << "# warning: " << w << "\n";

  if (has_labels) out << table.label_column_name << ",";
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << table.columns[c] << (c + 1 < table.columns.size() ? "," : "");
  if (any_nonfinite) out << ",quality_ok";
  out << "\n";

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (has_labels) out << table.labels[r] << ",";
    bool row_ok = true;
    for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
      const double v = table.rows[r][c];
      row_ok &= std::isfinite(v);
      out << format_double(v) << (c + 1 < table.rows[r].size() ? "," : "");
    }
    if (any_nonfinite) out << "," << (row_ok ? 1 : 0);
    out << "\n";
  }
  return out.str();
}

void write_csv_file(const ResultTable& table, const std::string& path) {
  const std::string text = to_csv(table);  // may throw before any file exists
  const std::string tmp = path + ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open output file: " + tmp);
    file << text;
    if (!file.good()) {
      file.close();
      std::remove(tmp.c_str());
      throw std::runtime_error("failed writing output file: " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("failed moving output into place: " + path);
  }
}

CsvData read_csv_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open CSV file: " + path);
  CsvData data;
  std::string line;
  bool have_header = false;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      data.columns = cells;
      have_header = true;
      continue;
    }
    std::vector<double> values;
    values.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        const double v = std::stod(c, &used);
        values.push_back(used == c.size() ? v
                                          : std::numeric_limits<double>::quiet_NaN());
      } catch (const std::exception&) {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    data.rows.push_back(std::move(values));
  }
  if (!have_header) throw std::runtime_error("CSV file has no header: " + path);
  return data;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace hfepr
