#include "hfepr/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hfepr/constants.hpp"
#include "hfepr/table.hpp"

namespace hfepr {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

// Raw line-oriented document: ordered sections of key/value pairs.
struct RawSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
};

struct RawDoc {
  std::vector<RawSection> sections;

  const RawSection* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
};

RawDoc tokenize(const std::string& text, std::vector<std::string>& errors) {
  RawDoc doc;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  RawSection* current = nullptr;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        errors.push_back("line " + std::to_string(line_no) +
                         ": unterminated section header");
        continue;
      }
      const std::string name = trim(t.substr(1, t.size() - 2));
      if (name.empty()) {
        errors.push_back("line " + std::to_string(line_no) + ": empty section name");
        continue;
      }
      if (doc.find(name)) {
        errors.push_back("line " + std::to_string(line_no) +
                         ": duplicate section [" + name + "]");
        current = nullptr;
        continue;
      }
      doc.sections.push_back(RawSection{name, {}});
      current = &doc.sections.back();
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) +
                       ": expected 'key = value'");
      continue;
    }
    if (!current) {
      errors.push_back("line " + std::to_string(line_no) +
                       ": key outside any [section]");
      continue;
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      errors.push_back("line " + std::to_string(line_no) + ": empty key");
      continue;
    }
    for (const auto& [k, v] : current->entries)
      if (k == key)
        errors.push_back("line " + std::to_string(line_no) + ": duplicate key '" +
                         current->name + "." + key + "'");
    current->entries.emplace_back(key, value);
  }
  return doc;
}

// Typed access to one section with full error accounting; unconsumed
// keys are reported when the reader is finished.
class SectionReader {
 public:
  SectionReader(const RawSection* section, std::string name,
                std::vector<std::string>& errors)
      : section_(section), name_(std::move(name)), errors_(errors) {}

  bool present() const { return section_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) {
    if (!section_) return std::nullopt;
    for (const auto& [k, v] : section_->entries)
      if (k == key) {
        consumed_.insert(key);
        return v;
      }
    return std::nullopt;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const auto v = raw(key);
    return v ? *v : fallback;
  }

  std::string required_text(const std::string& key) {
    const auto v = raw(key);
    if (!v) {
      error(key, "is required");
      return {};
    }
    return *v;
  }

  double number(const std::string& key, double fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    return parse_number(key, *v, fallback);
  }

  double required_number(const std::string& key) {
    const auto v = raw(key);
    if (!v) {
      error(key, "is required");
      return 0.0;
    }
    return parse_number(key, *v, 0.0);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const double v = number(key, static_cast<double>(fallback));
    return static_cast<std::int64_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    error(key, "must be true or false");
    return fallback;
  }

  std::vector<double> number_list(const std::string& key) {
    const auto v = raw(key);
    std::vector<double> out;
    if (!v) return out;
    std::istringstream stream(*v);
    std::string item;
    while (std::getline(stream, item, ','))
      out.push_back(parse_number(key, trim(item), 0.0));
    return out;
  }

  std::vector<std::string> text_list(const std::string& key) {
    const auto v = raw(key);
    std::vector<std::string> out;
    if (!v) return out;
    std::istringstream stream(*v);
    std::string item;
    while (std::getline(stream, item, ',')) out.push_back(trim(item));
    return out;
  }

  void error(const std::string& key, const std::string& message) {
    errors_.push_back(name_ + "." + key + ": " + message);
  }

  void check(bool condition, const std::string& key, const std::string& message) {
    if (!condition) error(key, message);
  }

  void finish(bool strict, std::vector<std::string>& warnings) {
    if (!section_) return;
    for (const auto& [k, v] : section_->entries)
      if (!consumed_.count(k)) {
        const std::string message = "unknown key '" + name_ + "." + k + "'";
        if (strict)
          errors_.push_back(message);
        else
          warnings.push_back(message);
      }
  }

 private:
  double parse_number(const std::string& key, const std::string& value,
                      double fallback) {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      error(key, "is not a number: '" + value + "'");
      return fallback;
    }
  }

  const RawSection* section_;
  std::string name_;
  std::vector<std::string>& errors_;
  std::set<std::string> consumed_;
};

const std::map<std::string, ExperimentKind>& kind_table() {
  static const std::map<std::string, ExperimentKind> table = {
      {"spectrum", ExperimentKind::Spectrum},
      {"endor", ExperimentKind::Endor},
      {"rabi", ExperimentKind::Rabi},
      {"echo_rabi", ExperimentKind::EchoRabi},
      {"t1_sweep", ExperimentKind::T1Sweep},
      {"t2_sweep", ExperimentKind::T2Sweep},
      {"dnp_pump", ExperimentKind::DnpPump},
      {"dnp_decay", ExperimentKind::DnpDecay},
      {"fit_t1", ExperimentKind::FitT1},
      {"fit_arrhenius", ExperimentKind::FitArrhenius},
  };
  return table;
}

}  // namespace

std::string kind_name(ExperimentKind kind) {
  for (const auto& [name, k] : kind_table())
    if (k == kind) return name;
  return "unknown";
}

std::optional<ExperimentKind> kind_from_name(const std::string& name) {
  const auto it = kind_table().find(name);
  if (it == kind_table().end()) return std::nullopt;
  return it->second;
}

bool is_fit_kind(ExperimentKind kind) {
  return kind == ExperimentKind::FitT1 || kind == ExperimentKind::FitArrhenius;
}

bool SpectrumConfig::operator==(const SpectrumConfig& other) const {
  return nu_ghz == other.nu_ghz && field_min_t == other.field_min_t &&
         field_max_t == other.field_max_t && points == other.points &&
         derivative == other.derivative && centers == other.centers;
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return kind == other.kind && seed == other.seed && output == other.output &&
         params == other.params;
}

namespace {

void read_system(SectionReader& reader, DnpSystemConfig& system) {
  system.preset = reader.text("preset", "");
  if (!system.preset.empty()) {
    const auto preset = system_preset(system.preset);
    if (!preset) {
      reader.error("preset", "unknown system preset '" + system.preset + "'");
    } else {
      const std::string keep = system.preset;
      system = *preset;
      system.preset = keep;
    }
  }
  system.nu_e_ghz = reader.number("nu_e_ghz", system.nu_e_ghz);
  system.nu_n_mhz = reader.number("nu_n_mhz", system.nu_n_mhz);
  system.a_mhz = reader.number("a_mhz", system.a_mhz);
  system.temp_k = reader.number("temp_k", system.temp_k);
  system.w_e_per_s = reader.number("w_e_per_s", system.w_e_per_s);
  system.w_n_per_s = reader.number("w_n_per_s", system.w_n_per_s);
  system.eta_override = reader.number("eta_override", system.eta_override);
  reader.check(system.nu_e_ghz > 0.0, "nu_e_ghz", "must be > 0");
  reader.check(system.a_mhz >= 0.0, "a_mhz", "must be >= 0");
  reader.check(system.temp_k > 0.0, "temp_k", "must be > 0");
  reader.check(system.w_e_per_s > 0.0, "w_e_per_s", "must be > 0");
  reader.check(system.w_n_per_s >= 0.0, "w_n_per_s", "must be >= 0");
}

SpectrumConfig read_spectrum(const RawDoc& doc, const ParseOptions& options,
                             std::vector<std::string>& errors,
                             std::vector<std::string>& warnings) {
  SpectrumConfig config;
  SectionReader reader(doc.find("spectrum"), "spectrum", errors);
  if (!reader.present()) {
    errors.push_back("spectrum: section is required for kind=spectrum");
    return config;
  }
  config.nu_ghz = reader.required_number("nu_ghz");
  config.field_min_t = reader.required_number("field_min_t");
  config.field_max_t = reader.required_number("field_max_t");
  config.points = static_cast<int>(reader.integer("points", config.points));
  config.derivative = reader.boolean("derivative", config.derivative);
  reader.check(config.nu_ghz > 0.0, "nu_ghz", "must be > 0");
  reader.check(config.field_max_t > config.field_min_t, "field_max_t",
               "must exceed field_min_t");
  reader.check(config.points >= 2, "points", "must be >= 2");
  reader.finish(options.strict, warnings);

  for (const auto& section : doc.sections) {
    if (section.name.rfind("center.", 0) != 0) continue;
    SectionReader center_reader(&section, section.name, errors);
    CenterDescriptor center;
    center.label = section.name.substr(7);
    center.g = center_reader.required_number("g");
    center.relative_weight = center_reader.number("weight", 1.0);
    center.fwhm_tesla = center_reader.number("fwhm_t", 1e-4);
    center.lorentzian_fraction = center_reader.number("lorentzian_fraction", 0.0);
    const auto hyperfine = center_reader.raw("hyperfine_mhz");
    if (hyperfine) {
      // "a_mhz:I" pairs, comma separated.
      std::istringstream stream(*hyperfine);
      std::string item;
      while (std::getline(stream, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
          center_reader.error("hyperfine_mhz", "expected 'a_mhz:I' pairs");
          continue;
        }
        try {
          HyperfineLine line;
          line.a_hz = std::stod(trim(item.substr(0, colon))) * 1e6;
          line.quantum_number = std::stod(trim(item.substr(colon + 1)));
          center.hyperfine_lines.push_back(line);
        } catch (const std::exception&) {
          center_reader.error("hyperfine_mhz", "is not a 'a_mhz:I' list");
        }
      }
    }
    center_reader.check(center.g > 0.0, "g", "must be > 0");
    center_reader.check(center.relative_weight >= 0.0, "weight", "must be >= 0");
    center_reader.check(center.fwhm_tesla > 0.0, "fwhm_t", "must be > 0");
    center_reader.finish(options.strict, warnings);
    config.centers.push_back(std::move(center));
  }
  if (config.centers.empty())
    errors.push_back("spectrum: at least one [center.NAME] section is required");
  return config;
}

EndorConfig read_endor(const RawDoc& doc, const ParseOptions& options,
                       std::vector<std::string>& errors,
                       std::vector<std::string>& warnings) {
  EndorConfig config;
  SectionReader reader(doc.find("endor"), "endor", errors);
  if (!reader.present()) {
    errors.push_back("endor: section is required for kind=endor");
    return config;
  }
  config.isotopes = reader.text_list("isotopes");
  config.b0_t = reader.required_number("b0_t");
  config.a_mhz = reader.number("a_mhz", 0.0);
  if (config.isotopes.empty())
    reader.error("isotopes", "needs at least one isotope label");
  for (const auto& isotope : config.isotopes) {
    try {
      gyromagnetic_ratio(isotope.c_str());
    } catch (const std::exception&) {
      reader.error("isotopes", "unknown isotope '" + isotope + "'");
    }
  }
  reader.check(config.b0_t > 0.0, "b0_t", "must be > 0");
  reader.finish(options.strict, warnings);
  return config;
}

RabiConfig read_rabi_block(SectionReader& reader) {
  RabiConfig config;
  config.g = reader.number("g", config.g);
  config.nu_ghz = reader.number("nu_ghz", config.nu_ghz);
  config.b1_mean_gauss = reader.number("b1_mean_gauss", config.b1_mean_gauss);
  config.distribution = reader.text("distribution", config.distribution);
  config.sd_fraction = reader.number("sd_fraction", config.sd_fraction);
  config.min_fraction = reader.number("min_fraction", config.min_fraction);
  config.max_fraction = reader.number("max_fraction", config.max_fraction);
  config.samples = static_cast<int>(reader.integer("samples", config.samples));
  config.tp_max_us = reader.number("tp_max_us", config.tp_max_us);
  config.tp_points = static_cast<int>(reader.integer("tp_points", config.tp_points));
  config.temperature_k = reader.number("temperature_k", config.temperature_k);
  config.carrier_offset_mhz =
      reader.number("carrier_offset_mhz", config.carrier_offset_mhz);

  reader.check(config.g > 0.0, "g", "must be > 0");
  reader.check(config.nu_ghz > 0.0, "nu_ghz", "must be > 0");
  reader.check(config.b1_mean_gauss > 0.0, "b1_mean_gauss", "must be > 0");
  reader.check(config.distribution == "delta" || config.distribution == "uniform" ||
                   config.distribution == "gaussian",
               "distribution", "must be delta, uniform or gaussian");
  if (config.distribution == "gaussian")
    reader.check(config.sd_fraction > 0.0, "sd_fraction", "must be > 0");
  if (config.distribution == "uniform")
    reader.check(config.min_fraction >= 0.0 &&
                     config.max_fraction >= config.min_fraction,
                 "min_fraction", "needs 0 <= min_fraction <= max_fraction");
  reader.check(config.samples >= 1, "samples", "must be >= 1");
  reader.check(config.tp_max_us > 0.0, "tp_max_us", "must be > 0");
  reader.check(config.tp_points >= 2, "tp_points", "must be >= 2");
  reader.check(config.temperature_k > 0.0, "temperature_k", "must be > 0");
  return config;
}

DnpPumpConfig read_dnp_pump(const RawDoc& doc, const ParseOptions& options,
                            std::vector<std::string>& errors,
                            std::vector<std::string>& warnings) {
  DnpPumpConfig config;
  SectionReader reader(doc.find("dnp_pump"), "dnp_pump", errors);
  if (!reader.present()) {
    errors.push_back("dnp_pump: section is required for kind=dnp_pump");
    return config;
  }
  read_system(reader, config.system);
  config.mode = reader.text("mode", config.mode);
  config.target = reader.text("target", config.target);
  config.saturation_per_s = reader.number("saturation_per_s", config.saturation_per_s);
  config.rf_target = reader.text("rf_target", config.rf_target);
  config.rf_saturation_per_s =
      reader.number("rf_saturation_per_s", config.rf_saturation_per_s);
  config.duration_s = reader.number("duration_s", config.duration_s);
  config.points = static_cast<int>(reader.integer("points", config.points));
  config.segment_s = reader.number("segment_s", config.segment_s);

  reader.check(config.mode == "overhauser" || config.mode == "endor_cw" ||
                   config.mode == "endor_pulsed",
               "mode", "must be overhauser, endor_cw or endor_pulsed");
  reader.check(config.target == "epr_mi_minus" || config.target == "epr_mi_plus",
               "target", "must be epr_mi_minus or epr_mi_plus");
  reader.check(config.rf_target == "nuclear_ms_plus" ||
                   config.rf_target == "nuclear_ms_minus",
               "rf_target", "must be nuclear_ms_plus or nuclear_ms_minus");
  reader.check(config.saturation_per_s >= 0.0, "saturation_per_s", "must be >= 0");
  reader.check(config.rf_saturation_per_s >= 0.0, "rf_saturation_per_s",
               "must be >= 0");
  reader.check(config.duration_s > 0.0, "duration_s", "must be > 0");
  reader.check(config.points >= 2, "points", "must be >= 2");
  reader.finish(options.strict, warnings);
  return config;
}

DnpDecayConfig read_dnp_decay(const RawDoc& doc, const ParseOptions& options,
                              std::vector<std::string>& errors,
                              std::vector<std::string>& warnings) {
  DnpDecayConfig config;
  SectionReader reader(doc.find("dnp_decay"), "dnp_decay", errors);
  if (!reader.present()) {
    errors.push_back("dnp_decay: section is required for kind=dnp_decay");
    return config;
  }
  read_system(reader, config.system);
  config.temperatures_k = reader.number_list("temperatures_k");
  config.w_e_model = reader.text("w_e_model", config.w_e_model);
  config.w_e_per_s_per_k = reader.number("w_e_per_s_per_k", config.w_e_per_s_per_k);

  reader.check(config.temperatures_k.size() >= 3, "temperatures_k",
               "needs >= 3 temperatures");
  for (const double t : config.temperatures_k)
    reader.check(t > 0.0, "temperatures_k", "temperatures must be > 0");
  reader.check(config.w_e_model == "constant" || config.w_e_model == "direct",
               "w_e_model", "must be constant or direct");
  if (config.w_e_model == "direct")
    reader.check(config.w_e_per_s_per_k > 0.0, "w_e_per_s_per_k", "must be > 0");
  reader.finish(options.strict, warnings);
  return config;
}

}  // namespace

ParseResult parse_config(const std::string& text, ParseOptions options) {
  ParseResult result;
  RawDoc doc = tokenize(text, result.errors);

  ExperimentConfig config;
  SectionReader experiment(doc.find("experiment"), "experiment", result.errors);
  if (!experiment.present()) {
    result.errors.push_back("experiment: section is required");
    return result;
  }
  const std::string kind_text = experiment.required_text("kind");
  const auto kind = kind_from_name(kind_text);
  if (!kind) {
    experiment.error("kind", "unknown experiment kind '" + kind_text + "'");
    return result;
  }
  config.kind = *kind;
  const double seed = experiment.number("seed", static_cast<double>(kDefaultSeed));
  if (seed < 0.0)
    experiment.error("seed", "must be >= 0");
  config.seed = static_cast<std::uint64_t>(seed);
  config.output = experiment.text("output", kind_name(config.kind) + ".csv");
  experiment.finish(options.strict, result.warnings);

  std::set<std::string> known_sections = {"experiment", kind_name(config.kind)};

  switch (config.kind) {
    case ExperimentKind::Spectrum:
      config.params = read_spectrum(doc, options, result.errors, result.warnings);
      for (const auto& section : doc.sections)
        if (section.name.rfind("center.", 0) == 0)
          known_sections.insert(section.name);
      break;
    case ExperimentKind::Endor:
      config.params = read_endor(doc, options, result.errors, result.warnings);
      break;
    case ExperimentKind::Rabi: {
      SectionReader reader(doc.find("rabi"), "rabi", result.errors);
      if (!reader.present()) {
        result.errors.push_back("rabi: section is required for kind=rabi");
        break;
      }
      config.params = read_rabi_block(reader);
      reader.finish(options.strict, result.warnings);
      break;
    }
    case ExperimentKind::EchoRabi: {
      SectionReader reader(doc.find("echo_rabi"), "echo_rabi", result.errors);
      if (!reader.present()) {
        result.errors.push_back("echo_rabi: section is required for kind=echo_rabi");
        break;
      }
      EchoRabiConfig echo;
      echo.pulse = read_rabi_block(reader);
      echo.tau_us = reader.number("tau_us", echo.tau_us);
      echo.t2_us = reader.number("t2_us", echo.t2_us);
      reader.check(echo.tau_us > 0.0, "tau_us", "must be > 0");
      reader.check(echo.t2_us > 0.0, "t2_us", "must be > 0");
      reader.finish(options.strict, result.warnings);
      config.params = echo;
      break;
    }
    case ExperimentKind::T1Sweep: {
      SectionReader reader(doc.find("t1_sweep"), "t1_sweep", result.errors);
      if (!reader.present()) {
        result.errors.push_back("t1_sweep: section is required for kind=t1_sweep");
        break;
      }
      T1SweepConfig sweep;
      sweep.a_direct = reader.number("a_direct", sweep.a_direct);
      sweep.n_exponent = reader.number("n_exponent", sweep.n_exponent);
      sweep.a_orbach = reader.number("a_orbach", sweep.a_orbach);
      sweep.delta_k = reader.number("delta_k", sweep.delta_k);
      sweep.orbach_form = reader.text("orbach_form", sweep.orbach_form);
      sweep.nu_ghz = reader.number_list("nu_ghz");
      sweep.temp_min_k = reader.number("temp_min_k", sweep.temp_min_k);
      sweep.temp_max_k = reader.number("temp_max_k", sweep.temp_max_k);
      sweep.temp_points = static_cast<int>(reader.integer("temp_points", 8));
      reader.check(sweep.a_direct >= 0.0, "a_direct", "must be >= 0");
      reader.check(sweep.n_exponent >= 0.0 && sweep.n_exponent <= 6.0,
                   "n_exponent", "must be in [0, 6]");
      reader.check(sweep.a_orbach >= 0.0, "a_orbach", "must be >= 0");
      reader.check(sweep.delta_k >= 0.0, "delta_k", "must be >= 0");
      reader.check(sweep.orbach_form == "exponential" || sweep.orbach_form == "bose",
                   "orbach_form", "must be exponential or bose");
      if (sweep.nu_ghz.empty())
        reader.error("nu_ghz", "needs at least one frequency");
      for (const double nu : sweep.nu_ghz)
        reader.check(nu > 0.0, "nu_ghz", "frequencies must be > 0");
      reader.check(sweep.temp_min_k > 0.0, "temp_min_k", "must be > 0");
      reader.check(sweep.temp_max_k >= sweep.temp_min_k, "temp_max_k",
                   "must be >= temp_min_k");
      reader.check(sweep.temp_points >= 2, "temp_points", "must be >= 2");
      reader.finish(options.strict, result.warnings);
      config.params = sweep;
      break;
    }
    case ExperimentKind::T2Sweep: {
      SectionReader reader(doc.find("t2_sweep"), "t2_sweep", result.errors);
      if (!reader.present()) {
        result.errors.push_back("t2_sweep: section is required for kind=t2_sweep");
        break;
      }
      T2SweepConfig sweep;
      sweep.t2_floor_us = reader.number("t2_floor_us", sweep.t2_floor_us);
      sweep.c_flipflop_per_s = reader.number("c_flipflop_per_s", sweep.c_flipflop_per_s);
      sweep.calibrate_t2_us = reader.number("calibrate_t2_us", sweep.calibrate_t2_us);
      sweep.calibrate_temp_k = reader.number("calibrate_temp_k", sweep.calibrate_temp_k);
      sweep.nu_ghz = reader.number("nu_ghz", sweep.nu_ghz);
      sweep.temp_min_k = reader.number("temp_min_k", sweep.temp_min_k);
      sweep.temp_max_k = reader.number("temp_max_k", sweep.temp_max_k);
      sweep.temp_points = static_cast<int>(reader.integer("temp_points", 60));
      sweep.log_spacing = reader.boolean("log_spacing", sweep.log_spacing);
      reader.check(sweep.t2_floor_us > 0.0, "t2_floor_us", "must be > 0");
      reader.check(sweep.nu_ghz > 0.0, "nu_ghz", "must be > 0");
      reader.check(sweep.calibrate_t2_us > 0.0, "calibrate_t2_us", "must be > 0");
      reader.check(sweep.calibrate_temp_k > 0.0, "calibrate_temp_k", "must be > 0");
      reader.check(sweep.temp_min_k > 0.0, "temp_min_k", "must be > 0");
      reader.check(sweep.temp_max_k >= sweep.temp_min_k, "temp_max_k",
                   "must be >= temp_min_k");
      reader.check(sweep.temp_points >= 2, "temp_points", "must be >= 2");
      reader.finish(options.strict, result.warnings);
      config.params = sweep;
      break;
    }
    case ExperimentKind::DnpPump:
      config.params = read_dnp_pump(doc, options, result.errors, result.warnings);
      break;
    case ExperimentKind::DnpDecay:
      config.params = read_dnp_decay(doc, options, result.errors, result.warnings);
      break;
    case ExperimentKind::FitT1: {
      SectionReader reader(doc.find("fit_t1"), "fit_t1", result.errors);
      if (!reader.present()) {
        result.errors.push_back("fit_t1: section is required for kind=fit_t1");
        break;
      }
      FitT1Config fit;
      fit.input = reader.required_text("input");
      fit.fix_exponent = reader.boolean("fix_exponent", fit.fix_exponent);
      fit.exponent = reader.number("exponent", fit.exponent);
      fit.orbach_form = reader.text("orbach_form", fit.orbach_form);
      reader.check(fit.orbach_form == "exponential" || fit.orbach_form == "bose",
                   "orbach_form", "must be exponential or bose");
      reader.finish(options.strict, result.warnings);
      config.params = fit;
      break;
    }
    case ExperimentKind::FitArrhenius: {
      SectionReader reader(doc.find("fit_arrhenius"), "fit_arrhenius", result.errors);
      if (!reader.present()) {
        result.errors.push_back(
            "fit_arrhenius: section is required for kind=fit_arrhenius");
        break;
      }
      FitArrheniusConfig fit;
      fit.input = reader.required_text("input");
      reader.finish(options.strict, result.warnings);
      config.params = fit;
      break;
    }
  }

  for (const auto& section : doc.sections)
    if (!known_sections.count(section.name)) {
      const std::string message = "unknown section [" + section.name + "]";
      if (options.strict)
        result.errors.push_back(message);
      else
        result.warnings.push_back(message);
    }

  if (result.errors.empty()) result.config = std::move(config);
  return result;
}

namespace {

// Exact round-trip formatting for serialization.
std::string num17(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void emit(std::ostringstream& out, const std::string& key, const std::string& value) {
  out << key << " = " << value << "\n";
}
void emit(std::ostringstream& out, const std::string& key, double value) {
  emit(out, key, num17(value));
}
void emit(std::ostringstream& out, const std::string& key, bool value) {
  emit(out, key, std::string(value ? "true" : "false"));
}
void emit(std::ostringstream& out, const std::string& key, int value) {
  emit(out, key, std::to_string(value));
}

void emit_system(std::ostringstream& out, const DnpSystemConfig& system) {
  if (!system.preset.empty()) emit(out, "preset", system.preset);
  emit(out, "nu_e_ghz", system.nu_e_ghz);
  emit(out, "nu_n_mhz", system.nu_n_mhz);
  emit(out, "a_mhz", system.a_mhz);
  emit(out, "temp_k", system.temp_k);
  emit(out, "w_e_per_s", system.w_e_per_s);
  emit(out, "w_n_per_s", system.w_n_per_s);
  emit(out, "eta_override", system.eta_override);
}

void emit_rabi(std::ostringstream& out, const RabiConfig& rabi) {
  emit(out, "g", rabi.g);
  emit(out, "nu_ghz", rabi.nu_ghz);
  emit(out, "b1_mean_gauss", rabi.b1_mean_gauss);
  emit(out, "distribution", rabi.distribution);
  emit(out, "sd_fraction", rabi.sd_fraction);
  emit(out, "min_fraction", rabi.min_fraction);
  emit(out, "max_fraction", rabi.max_fraction);
  emit(out, "samples", rabi.samples);
  emit(out, "tp_max_us", rabi.tp_max_us);
  emit(out, "tp_points", rabi.tp_points);
  emit(out, "temperature_k", rabi.temperature_k);
  emit(out, "carrier_offset_mhz", rabi.carrier_offset_mhz);
}

std::string join_numbers(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += num17(values[i]);
  }
  return out;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "[experiment]\n";
  emit(out, "kind", kind_name(config.kind));
  emit(out, "seed", std::to_string(config.seed));
  emit(out, "output", config.output);
  out << "\n[" << kind_name(config.kind) << "]\n";

  std::visit(
      [&](const auto& params) {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, SpectrumConfig>) {
          emit(out, "nu_ghz", params.nu_ghz);
          emit(out, "field_min_t", params.field_min_t);
          emit(out, "field_max_t", params.field_max_t);
          emit(out, "points", params.points);
          emit(out, "derivative", params.derivative);
          for (const auto& center : params.centers) {
            out << "\n[center." << center.label << "]\n";
            emit(out, "g", center.g);
            emit(out, "weight", center.relative_weight);
            emit(out, "fwhm_t", center.fwhm_tesla);
            emit(out, "lorentzian_fraction", center.lorentzian_fraction);
            if (!center.hyperfine_lines.empty()) {
              std::string list;
              for (std::size_t i = 0; i < center.hyperfine_lines.size(); ++i) {
                if (i) list += ",";
                list += num17(center.hyperfine_lines[i].a_hz / 1e6) + ":" +
                        num17(center.hyperfine_lines[i].quantum_number);
              }
              emit(out, "hyperfine_mhz", list);
            }
          }
        } else if constexpr (std::is_same_v<T, EndorConfig>) {
          std::string isotopes;
          for (std::size_t i = 0; i < params.isotopes.size(); ++i) {
            if (i) isotopes += ",";
            isotopes += params.isotopes[i];
          }
          emit(out, "isotopes", isotopes);
          emit(out, "b0_t", params.b0_t);
          emit(out, "a_mhz", params.a_mhz);
        } else if constexpr (std::is_same_v<T, RabiConfig>) {
          emit_rabi(out, params);
        } else if constexpr (std::is_same_v<T, EchoRabiConfig>) {
          emit_rabi(out, params.pulse);
          emit(out, "tau_us", params.tau_us);
          emit(out, "t2_us", params.t2_us);
        } else if constexpr (std::is_same_v<T, T1SweepConfig>) {
          emit(out, "a_direct", params.a_direct);
          emit(out, "n_exponent", params.n_exponent);
          emit(out, "a_orbach", params.a_orbach);
          emit(out, "delta_k", params.delta_k);
          emit(out, "orbach_form", params.orbach_form);
          emit(out, "nu_ghz", join_numbers(params.nu_ghz));
          emit(out, "temp_min_k", params.temp_min_k);
          emit(out, "temp_max_k", params.temp_max_k);
          emit(out, "temp_points", params.temp_points);
        } else if constexpr (std::is_same_v<T, T2SweepConfig>) {
          emit(out, "t2_floor_us", params.t2_floor_us);
          emit(out, "c_flipflop_per_s", params.c_flipflop_per_s);
          emit(out, "calibrate_t2_us", params.calibrate_t2_us);
          emit(out, "calibrate_temp_k", params.calibrate_temp_k);
          emit(out, "nu_ghz", params.nu_ghz);
          emit(out, "temp_min_k", params.temp_min_k);
          emit(out, "temp_max_k", params.temp_max_k);
          emit(out, "temp_points", params.temp_points);
          emit(out, "log_spacing", params.log_spacing);
        } else if constexpr (std::is_same_v<T, DnpPumpConfig>) {
          emit_system(out, params.system);
          emit(out, "mode", params.mode);
          emit(out, "target", params.target);
          emit(out, "saturation_per_s", params.saturation_per_s);
          emit(out, "rf_target", params.rf_target);
          emit(out, "rf_saturation_per_s", params.rf_saturation_per_s);
          emit(out, "duration_s", params.duration_s);
          emit(out, "points", params.points);
          emit(out, "segment_s", params.segment_s);
        } else if constexpr (std::is_same_v<T, DnpDecayConfig>) {
          emit_system(out, params.system);
          emit(out, "temperatures_k", join_numbers(params.temperatures_k));
          emit(out, "w_e_model", params.w_e_model);
          emit(out, "w_e_per_s_per_k", params.w_e_per_s_per_k);
        } else if constexpr (std::is_same_v<T, FitT1Config>) {
          emit(out, "input", params.input);
          emit(out, "fix_exponent", params.fix_exponent);
          emit(out, "exponent", params.exponent);
          emit(out, "orbach_form", params.orbach_form);
        } else if constexpr (std::is_same_v<T, FitArrheniusConfig>) {
          emit(out, "input", params.input);
        }
      },
      config.params);
  return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
  return fnv1a_hex(serialize_config(config));
}

std::vector<std::string> system_preset_names() { return {"si-p-240ghz"}; }

std::optional<DnpSystemConfig> system_preset(const std::string& name) {
  if (name == "si-p-240ghz") {
    // Si:P donor at 240 GHz; nu_n from gamma(31P) at the matching field.
    const FourLevelSystem sys = si_p_system(240e9, 3.0, 1000.0, 0.0);
    DnpSystemConfig config;
    config.preset = name;
    config.nu_e_ghz = sys.nu_e_hz / 1e9;
    config.nu_n_mhz = sys.nu_n_hz / 1e6;
    config.a_mhz = sys.a_hz / 1e6;
    config.temp_k = sys.temp_k;
    config.w_e_per_s = sys.w_e;
    config.w_n_per_s = sys.w_n;
    config.eta_override = -1.0;
    return config;
  }
  return std::nullopt;
}

FourLevelSystem make_four_level_system(const DnpSystemConfig& config) {
  FourLevelSystem sys;
  sys.nu_e_hz = config.nu_e_ghz * 1e9;
  sys.nu_n_hz = config.nu_n_mhz * 1e6;
  sys.a_hz = config.a_mhz * 1e6;
  sys.temp_k = config.temp_k;
  sys.w_e = config.w_e_per_s;
  sys.w_n = config.w_n_per_s;
  if (config.eta_override >= 0.0) sys.eta_override = config.eta_override;
  return sys;
}

}  // namespace hfepr
