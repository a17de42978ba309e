// Experiment configuration: a line-oriented key = value document with
// [section] headers. Parsing validates the whole schema and reports
// every violation, not just the first. Serialization is canonical
// (defaults filled, fixed key order) so configs hash and round-trip
// deterministically.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hfepr/dnp.hpp"
#include "hfepr/relaxation.hpp"
#include "hfepr/spectra.hpp"

namespace hfepr {

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind {
  Spectrum,
  Endor,
  Rabi,
  EchoRabi,
  T1Sweep,
  T2Sweep,
  DnpPump,
  DnpDecay,
  FitT1,
  FitArrhenius,
};

std::string kind_name(ExperimentKind kind);
std::optional<ExperimentKind> kind_from_name(const std::string& name);
bool is_fit_kind(ExperimentKind kind);

struct SpectrumConfig {
  double nu_ghz = 9.7;
  double field_min_t = 0.0;
  double field_max_t = 1.0;
  int points = 2000;
  bool derivative = false;
  std::vector<CenterDescriptor> centers;
  bool operator==(const SpectrumConfig&) const;
};

struct EndorConfig {
  std::vector<std::string> isotopes;
  double b0_t = 8.55;
  double a_mhz = 0.0;
  bool operator==(const EndorConfig&) const = default;
};

struct RabiConfig {
  double g = 1.9985;
  double nu_ghz = 240.0;  // resonance frequency; B0 derived from g
  double b1_mean_gauss = 0.3;
  std::string distribution = "delta";  // delta | uniform | gaussian
  double sd_fraction = 0.0;            // gaussian: sd / mean
  double min_fraction = 1.0;           // uniform: bounds / mean
  double max_fraction = 1.0;
  int samples = 256;
  double tp_max_us = 25.0;
  int tp_points = 512;
  double temperature_k = 3.0;
  double carrier_offset_mhz = 0.0;
  bool operator==(const RabiConfig&) const = default;
};

struct EchoRabiConfig {
  RabiConfig pulse;
  double tau_us = 1.0;
  double t2_us = 100.0;
  bool operator==(const EchoRabiConfig&) const = default;
};

struct T1SweepConfig {
  double a_direct = 0.0;
  double n_exponent = 4.0;
  double a_orbach = 0.0;
  double delta_k = 0.0;
  std::string orbach_form = "exponential";  // exponential | bose
  std::vector<double> nu_ghz;
  double temp_min_k = 4.0;
  double temp_max_k = 20.0;
  int temp_points = 8;
  bool operator==(const T1SweepConfig&) const = default;
};

struct T2SweepConfig {
  double t2_floor_us = 300.0;
  // Either a direct flip-flop constant or a calibration point.
  double c_flipflop_per_s = -1.0;  // < 0 means "use calibration"
  double calibrate_t2_us = 6.0;
  double calibrate_temp_k = 300.0;
  double nu_ghz = 240.0;
  double temp_min_k = 1.3;
  double temp_max_k = 300.0;
  int temp_points = 60;
  bool log_spacing = true;
  bool operator==(const T2SweepConfig&) const = default;
};

struct DnpSystemConfig {
  std::string preset;  // e.g. "si-p-240ghz"; empty = explicit fields
  double nu_e_ghz = 240.0;
  double nu_n_mhz = 0.0;
  double a_mhz = 0.0;
  double temp_k = 3.0;
  double w_e_per_s = 1000.0;
  double w_n_per_s = 0.0;
  double eta_override = -1.0;  // < 0 means "default a/(2 nu_e)"
  bool operator==(const DnpSystemConfig&) const = default;
};

struct DnpPumpConfig {
  DnpSystemConfig system;
  std::string mode = "overhauser";  // overhauser | endor_cw | endor_pulsed
  std::string target = "epr_mi_minus";
  double saturation_per_s = 1e6;
  std::string rf_target = "nuclear_ms_plus";
  double rf_saturation_per_s = 1e6;
  double duration_s = 1.0;
  int points = 200;
  double segment_s = 0.0;  // pulsed mode
  bool operator==(const DnpPumpConfig&) const = default;
};

struct DnpDecayConfig {
  DnpSystemConfig system;
  std::vector<double> temperatures_k;
  // w_e temperature model: "constant" uses system.w_e_per_s at every T;
  // "direct" uses w_e(T) = w_e_per_s_per_k * T.
  std::string w_e_model = "constant";
  double w_e_per_s_per_k = 0.0;
  bool operator==(const DnpDecayConfig&) const = default;
};

struct FitT1Config {
  std::string input;
  bool fix_exponent = false;
  double exponent = 4.0;
  std::string orbach_form = "exponential";
  bool operator==(const FitT1Config&) const = default;
};

struct FitArrheniusConfig {
  std::string input;
  bool operator==(const FitArrheniusConfig&) const = default;
};

using KindConfig =
    std::variant<SpectrumConfig, EndorConfig, RabiConfig, EchoRabiConfig,
                 T1SweepConfig, T2SweepConfig, DnpPumpConfig, DnpDecayConfig,
                 FitT1Config, FitArrheniusConfig>;

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Spectrum;
  std::uint64_t seed = kDefaultSeed;
  std::string output;  // CSV file name; defaults to "<kind>.csv"
  KindConfig params;
  bool operator==(const ExperimentConfig&) const;
};

struct ParseOptions {
  bool strict = true;  // unknown keys are errors (strict) or warnings
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;    // every schema violation, key paths
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty() && config.has_value(); }
};

ParseResult parse_config(const std::string& text, ParseOptions options = {});

// Canonical form: defaults filled, fixed order. parse(serialize(c))
// reproduces c exactly.
std::string serialize_config(const ExperimentConfig& config);

// Hash of the canonical serialization (embedded in result metadata).
std::string config_hash(const ExperimentConfig& config);

// Named four-level system presets (literature physical inputs).
std::vector<std::string> system_preset_names();
std::optional<DnpSystemConfig> system_preset(const std::string& name);

// Materializes the four-level system from a (preset or explicit)
// system block.
FourLevelSystem make_four_level_system(const DnpSystemConfig& config);

}  // namespace hfepr
