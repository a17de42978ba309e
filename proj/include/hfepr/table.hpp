// Tabular results and the CSV dialect used for all outputs: comma
// separated, '.' decimal point, LF line endings, header row with
// name_unit column names, run metadata in leading comment lines.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hfepr {

struct ResultTable {
  std::vector<std::string> columns;  // numeric column names (name_unit)
  std::vector<std::vector<double>> rows;

  // Optional leading text column (e.g. isotope or parameter names).
  std::string label_column_name;
  std::vector<std::string> labels;

  // Run metadata, embedded as comment lines.
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  void add_row(std::initializer_list<double> values);
};

// Deterministic number formatting shared by CSV and SVG output.
std::string format_double(double value);

// Serializes with '#' metadata comments. Rows containing NaN/Inf get an
// explicit quality_ok flag column (0 for bad rows); finite tables have
// no flag column. Throws std::invalid_argument on ragged tables.
std::string to_csv(const ResultTable& table);

// Atomic write: temp file in the target directory, then rename.
void write_csv_file(const ResultTable& table, const std::string& path);

// Reads a CSV data set (comment lines ignored, header required).
// Returns column names and row values; text cells parse as NaN.
struct CsvData {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
CsvData read_csv_file(const std::string& path);

// FNV-1a 64-bit hash, hex-encoded; used for config hashes.
std::string fnv1a_hex(const std::string& text);

}  // namespace hfepr
