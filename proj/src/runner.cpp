#include "hfepr/runner.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hfepr/constants.hpp"
#include "hfepr/density.hpp"
#include "hfepr/fit.hpp"
#include "hfepr/pulse.hpp"
#include "hfepr/relaxation.hpp"
#include "hfepr/spectra.hpp"

namespace hfepr {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i) out[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
  return out;
}

B1Distribution distribution_from(const RabiConfig& config) {
  const double mean = config.b1_mean_gauss * 1e-4;  // gauss -> tesla
  if (config.distribution == "uniform")
    return B1Distribution::uniform(config.min_fraction * mean,
                                   config.max_fraction * mean, config.samples);
  if (config.distribution == "gaussian")
    return B1Distribution::gaussian(mean, config.sd_fraction * mean,
                                    config.samples);
  return B1Distribution::delta(mean);
}

DriveTarget drive_target_from(const std::string& name) {
  if (name == "epr_mi_plus") return DriveTarget::EprMiPlus;
  if (name == "epr_mi_minus") return DriveTarget::EprMiMinus;
  if (name == "nuclear_ms_plus") return DriveTarget::NuclearMsPlus;
  return DriveTarget::NuclearMsMinus;
}

ResultTable run_spectrum(const SpectrumConfig& config) {
  const Spectrum spectrum = synthesize_epr_spectrum(
      config.centers, config.nu_ghz * 1e9,
      linspace(config.field_min_t, config.field_max_t, config.points),
      SpectrumOptions{config.derivative});
  ResultTable table;
  table.columns = {"axis_t", "intensity"};
  for (std::size_t i = 0; i < spectrum.axis.size(); ++i)
    table.add_row({spectrum.axis[i], spectrum.intensity[i]});
  table.warnings = spectrum.warnings;
  return table;
}

ResultTable run_endor(const EndorConfig& config) {
  ResultTable table;
  table.label_column_name = "isotope";
  table.columns = {"larmor_hz", "nu_low_hz", "nu_high_hz"};
  for (const auto& isotope : config.isotopes) {
    const double gamma = gyromagnetic_ratio(isotope.c_str());
    const auto [lo, hi] =
        endor_frequencies(gamma, config.b0_t, config.a_mhz * 1e6);
    table.labels.push_back(isotope);
    table.add_row({std::abs(gamma) * config.b0_t, lo, hi});
  }
  return table;
}

SpinSystem rabi_spin_system(const RabiConfig& config) {
  return SpinSystem({electron(config.g)});
}

double rabi_field(const RabiConfig& config) {
  // On-resonance field for the configured frequency.
  return constants.planck_h * config.nu_ghz * 1e9 /
         (config.g * constants.bohr_magneton);
}

ResultTable run_rabi(const RabiConfig& config) {
  const SpinSystem system = rabi_spin_system(config);
  NutationOptions options;
  options.temperature_k = config.temperature_k;
  options.carrier_offset_hz = config.carrier_offset_mhz * 1e6;
  const Series trace = rabi_nutation(
      system, rabi_field(config), distribution_from(config),
      linspace(0.0, config.tp_max_us * 1e-6, config.tp_points),
      Detection{Observable::Sz, 0}, options);
  ResultTable table;
  table.columns = {"tp_s", "signal"};
  for (const auto& [t, y] : trace) table.add_row({t, y});
  return table;
}

ResultTable run_echo_rabi(const EchoRabiConfig& config) {
  const SpinSystem system = rabi_spin_system(config.pulse);
  NutationOptions options;
  options.temperature_k = config.pulse.temperature_k;
  options.carrier_offset_hz = config.pulse.carrier_offset_mhz * 1e6;
  const Series trace = hahn_echo_rabi(
      system, rabi_field(config.pulse), distribution_from(config.pulse),
      linspace(0.0, config.pulse.tp_max_us * 1e-6, config.pulse.tp_points),
      config.tau_us * 1e-6, config.t2_us * 1e-6, options);
  ResultTable table;
  table.columns = {"tp_s", "signal"};
  for (const auto& [t, y] : trace) table.add_row({t, y});
  return table;
}

ResultTable run_t1_sweep(const T1SweepConfig& config) {
  T1Model model;
  model.a_direct = config.a_direct;
  model.n_exponent = config.n_exponent;
  model.a_orbach = config.a_orbach;
  model.delta_orbach_k = config.delta_k;
  model.orbach_form = config.orbach_form == "bose" ? OrbachForm::Bose
                                                   : OrbachForm::Exponential;
  ResultTable table;
  table.columns = {"nu_hz", "temp_k", "rate_per_s", "t1_s"};
  for (const double nu_ghz : config.nu_ghz)
    for (const double temp :
         linspace(config.temp_min_k, config.temp_max_k, config.temp_points)) {
      const double rate = t1_rate(model, nu_ghz * 1e9, temp);
      table.add_row({nu_ghz * 1e9, temp, rate, 1.0 / rate});
    }
  return table;
}

ResultTable run_t2_sweep(const T2SweepConfig& config) {
  T2Model model;
  model.r_floor = 1.0 / (config.t2_floor_us * 1e-6);
  if (config.c_flipflop_per_s >= 0.0) {
    model.c_flipflop = config.c_flipflop_per_s;
  } else {
    // Calibration point pins the flip-flop constant.
    const double target_rate = 1.0 / (config.calibrate_t2_us * 1e-6);
    const double factor =
        flip_flop_factor(config.nu_ghz * 1e9, config.calibrate_temp_k);
    const double c = (target_rate - model.r_floor) / factor;
    if (c < 0.0)
      throw std::runtime_error(
          "t2_sweep.calibrate_t2_us: calibration T2 exceeds the floor T2");
    model.c_flipflop = c;
  }
  ResultTable table;
  table.columns = {"nu_hz", "temp_k", "t2_s"};
  const std::vector<double> temps =
      config.log_spacing
          ? logspace(config.temp_min_k, config.temp_max_k, config.temp_points)
          : linspace(config.temp_min_k, config.temp_max_k, config.temp_points);
  for (const double temp : temps)
    table.add_row(
        {config.nu_ghz * 1e9, temp, t2_time(model, config.nu_ghz * 1e9, temp)});
  return table;
}

ResultTable run_dnp_pump(const DnpPumpConfig& config, std::string& report) {
  const FourLevelSystem sys = make_four_level_system(config.system);
  DnpTrajectory trajectory;
  if (config.mode == "overhauser") {
    trajectory = simulate_overhauser_pump(
        sys, DriveSpec{drive_target_from(config.target), config.saturation_per_s},
        config.duration_s, config.points);
  } else {
    EndorOptions options;
    options.schedule = config.mode == "endor_pulsed"
                           ? EndorSchedule::SequentialPulses
                           : EndorSchedule::Cw;
    options.segment_s = config.segment_s;
    options.n_points = config.points;
    trajectory = simulate_endor_assisted(
        sys, DriveSpec{drive_target_from(config.target), config.saturation_per_s},
        DriveSpec{drive_target_from(config.rf_target), config.rf_saturation_per_s},
        config.duration_s, options);
  }
  ResultTable table;
  table.columns = {"t_s", "p_nuclear"};
  for (const auto& [t, p] : trajectory.nuclear_polarization) table.add_row({t, p});
  table.warnings = trajectory.warnings;

  std::ostringstream rep;
  rep << "final nuclear polarization: "
      << format_double(trajectory.nuclear_polarization.back().second) << "\n";
  report += rep.str();
  return table;
}

ResultTable run_dnp_decay(const DnpDecayConfig& config, std::string& report) {
  const FourLevelSystem sys = make_four_level_system(config.system);
  std::vector<double> w_e_per_temp;
  if (config.w_e_model == "direct")
    for (const double t : config.temperatures_k)
      w_e_per_temp.push_back(config.w_e_per_s_per_k * t);
  const T1nResult result =
      extract_t1n(sys, config.temperatures_k, w_e_per_temp);

  ResultTable table;
  table.columns = {"temp_k", "t1n_s"};
  for (const auto& [temp, t1n] : result.t1n_per_temp) table.add_row({temp, t1n});
  if (!result.quality_flag.empty()) table.warnings.push_back(result.quality_flag);

  std::ostringstream rep;
  rep << "Arrhenius fit: 1/T1N = A exp(-dE/T)\n";
  rep << "  A = " << format_double(result.prefactor_per_s) << " 1/s\n";
  rep << "  dE = " << format_double(result.delta_e_k) << " K\n";
  report += rep.str();
  return table;
}

DataSet dataset_from_csv(const std::string& path) {
  const CsvData csv = read_csv_file(path);
  int nu_col = -1, temp_col = -1, t_col = -1, value_col = -1, sigma_col = -1;
  for (std::size_t c = 0; c < csv.columns.size(); ++c) {
    const std::string& name = csv.columns[c];
    if (name == "nu_hz") nu_col = static_cast<int>(c);
    if (name == "temp_k") temp_col = static_cast<int>(c);
    if (name == "t_s") t_col = static_cast<int>(c);
    if (name == "value" || name == "rate_per_s" || name == "t1n_s")
      value_col = static_cast<int>(c);
    if (name == "sigma") sigma_col = static_cast<int>(c);
  }
  if (value_col < 0)
    throw std::runtime_error(
        "fit input needs a value column (value, rate_per_s or t1n_s): " + path);
  DataSet data;
  data.provenance = path;
  for (const auto& row : csv.rows) {
    DataRow r;
    if (nu_col >= 0) r.nu_hz = row[nu_col];
    if (temp_col >= 0) r.temp_k = row[temp_col];
    if (t_col >= 0) r.t_s = row[t_col];
    r.value = row[value_col];
    if (sigma_col >= 0) r.sigma = row[sigma_col];
    data.rows.push_back(r);
  }
  return data;
}

std::string resolve_input(const std::string& path, const RunContext& context) {
  if (path.empty() || path.front() == '/') return path;
  return context.input_dir + "/" + path;
}

ResultTable run_fit_t1(const FitT1Config& config, const RunContext& context,
                       std::string& report) {
  const DataSet data = dataset_from_csv(resolve_input(config.input, context));
  T1FitSettings settings;
  settings.fix_exponent = config.fix_exponent;
  settings.fixed_exponent = config.exponent;
  settings.orbach_form = config.orbach_form == "bose" ? OrbachForm::Bose
                                                      : OrbachForm::Exponential;
  const T1FitResult result = fit_t1_model(data, settings);

  ResultTable table;
  table.label_column_name = "parameter";
  table.columns = {"value", "sigma"};
  const auto sigma = [&](int free_index) {
    if (!result.fit.converged || free_index < 0 ||
        result.fit.uncertainties.size() <= free_index)
      return 0.0;
    return result.fit.uncertainties(free_index);
  };
  // Parameter order in the fit vector depends on whether the exponent
  // was free; a fixed exponent reports sigma = 0.
  const bool n_free =
      !settings.fix_exponent && result.fit.parameters.size() == 4;
  table.labels = {"a_direct", "n_exponent", "a_orbach", "delta_k"};
  table.add_row({result.model.a_direct, sigma(0)});
  table.add_row({result.model.n_exponent, n_free ? sigma(1) : 0.0});
  table.add_row({result.model.a_orbach, n_free ? sigma(2) : sigma(1)});
  table.add_row({result.model.delta_orbach_k, n_free ? sigma(3) : sigma(2)});
  if (!result.fit.flag.empty()) table.warnings.push_back(result.fit.flag);

  std::ostringstream rep;
  rep << "T1 model fit: rate = a_direct (2 pi nu)^n T + a_orbach exp(-delta/T)\n";
  rep << "  converged: " << (result.fit.converged ? "yes" : "no")
      << "  iterations: " << result.fit.iterations
      << "  residual: " << format_double(result.fit.residual_norm) << "\n";
  rep << "  a_direct = " << format_double(result.model.a_direct) << "\n";
  rep << "  n        = " << format_double(result.model.n_exponent) << "\n";
  rep << "  a_orbach = " << format_double(result.model.a_orbach) << " 1/s\n";
  rep << "  delta    = " << format_double(result.model.delta_orbach_k)
      << " K (" << format_double(kelvin_to_wavenumber(result.model.delta_orbach_k))
      << " cm^-1)\n";
  if (!result.fit.flag.empty()) rep << "  flag: " << result.fit.flag << "\n";
  report += rep.str();
  return table;
}

ResultTable run_fit_arrhenius(const FitArrheniusConfig& config,
                              const RunContext& context, std::string& report) {
  const CsvData csv = read_csv_file(resolve_input(config.input, context));
  int temp_col = -1, value_col = -1;
  for (std::size_t c = 0; c < csv.columns.size(); ++c) {
    if (csv.columns[c] == "temp_k") temp_col = static_cast<int>(c);
    if (csv.columns[c] == "t1n_s" || csv.columns[c] == "value")
      value_col = static_cast<int>(c);
  }
  if (temp_col < 0 || value_col < 0)
    throw std::runtime_error("Arrhenius input needs temp_k and t1n_s columns");
  DataSet data;
  for (const auto& row : csv.rows) {
    DataRow r;
    r.temp_k = row[temp_col];
    r.value = row[value_col];
    data.rows.push_back(r);
  }
  const ArrheniusFit fit = fit_arrhenius(data);

  ResultTable table;
  table.label_column_name = "parameter";
  table.columns = {"value", "sigma"};
  table.labels = {"prefactor_per_s", "delta_e_k"};
  table.add_row({fit.prefactor_per_s, 0.0});
  table.add_row({fit.delta_e_k, fit.delta_e_sigma_k});

  std::ostringstream rep;
  rep << "Arrhenius fit: 1/T1N = A exp(-dE/T)\n";
  rep << "  A  = " << format_double(fit.prefactor_per_s) << " 1/s\n";
  rep << "  dE = " << format_double(fit.delta_e_k) << " K +- "
      << format_double(fit.delta_e_sigma_k) << " K\n";
  report += rep.str();
  return table;
}

}  // namespace

RunOutcome run(const ExperimentConfig& config, const RunContext& context) {
  ExperimentConfig effective = config;
  if (context.seed_override) effective.seed = *context.seed_override;

  RunOutcome outcome;
  ResultTable table;
  try {
    std::visit(
        [&](const auto& params) {
          using T = std::decay_t<decltype(params)>;
          if constexpr (std::is_same_v<T, SpectrumConfig>)
            table = run_spectrum(params);
          else if constexpr (std::is_same_v<T, EndorConfig>)
            table = run_endor(params);
          else if constexpr (std::is_same_v<T, RabiConfig>)
            table = run_rabi(params);
          else if constexpr (std::is_same_v<T, EchoRabiConfig>)
            table = run_echo_rabi(params);
          else if constexpr (std::is_same_v<T, T1SweepConfig>)
            table = run_t1_sweep(params);
          else if constexpr (std::is_same_v<T, T2SweepConfig>)
            table = run_t2_sweep(params);
          else if constexpr (std::is_same_v<T, DnpPumpConfig>)
            table = run_dnp_pump(params, outcome.report);
          else if constexpr (std::is_same_v<T, DnpDecayConfig>)
            table = run_dnp_decay(params, outcome.report);
          else if constexpr (std::is_same_v<T, FitT1Config>)
            table = run_fit_t1(params, context, outcome.report);
          else if constexpr (std::is_same_v<T, FitArrheniusConfig>)
            table = run_fit_arrhenius(params, context, outcome.report);
        },
        effective.params);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(kind_name(effective.kind) + ": " + e.what());
  }

  table.version = kVersion;
  table.config_hash = config_hash(effective);
  table.seed = effective.seed;
  outcome.table = std::move(table);

  if (context.write_files) {
    outcome.csv_path = context.output_dir + "/" + effective.output;
    write_csv_file(outcome.table, outcome.csv_path);
  }
  return outcome;
}

}  // namespace hfepr
