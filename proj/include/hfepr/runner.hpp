// Config-driven experiment dispatch: one validated ExperimentConfig in,
// one deterministic ResultTable (plus CSV file) out.

#pragma once

#include <optional>
#include <string>

#include "hfepr/config.hpp"
#include "hfepr/table.hpp"

namespace hfepr {

struct RunContext {
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed_override;
  // Directory used to resolve relative fit-input paths.
  std::string input_dir = ".";
  bool write_files = true;
};

struct RunOutcome {
  ResultTable table;
  std::string csv_path;  // empty when write_files is false
  std::string report;    // human-readable block (fits, Arrhenius summaries)
};

// Deterministic: identical (config, seed, preset table) produce
// bit-identical CSV bytes. Module errors surface as std::runtime_error
// prefixed with the config key path that caused them; partially written
// files are removed.
RunOutcome run(const ExperimentConfig& config, const RunContext& context = {});

}  // namespace hfepr
