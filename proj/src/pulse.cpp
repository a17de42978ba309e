#include "hfepr/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hfepr/constants.hpp"

namespace hfepr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::complex<double> kI{0.0, 1.0};

// Zeeman coefficient w0 such that the static term is w0 * Jz (rad/s).
double zeeman_coefficient(const SpinSpecies& sp, double b0_tesla) {
  if (sp.kind == SpinKind::Electron)
    return sp.g_or_gamma * constants.bohr_magneton * b0_tesla / constants.hbar;
  return -kTwoPi * sp.g_or_gamma * b0_tesla;
}

SpinKind channel_kind(PulseChannel channel) {
  return channel == PulseChannel::Microwave ? SpinKind::Electron
                                            : SpinKind::Nuclear;
}

struct EigenH {
  Matrix vectors;
  Eigen::VectorXd values;
};

EigenH decompose(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  return {solver.eigenvectors(), solver.eigenvalues()};
}

Matrix propagator(const EigenH& eig, double t) {
  Vector phases(eig.values.size());
  for (int i = 0; i < phases.size(); ++i)
    phases(i) = std::exp(-kI * eig.values(i) * t);
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

double acklam_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double q, r;
  if (p < p_low) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("quantile argument must be in (0, 1)");
  double x = acklam_quantile(p);
  // Two Newton refinements take the rational approximation to machine
  // precision.
  for (int i = 0; i < 2; ++i) {
    const double err = normal_cdf(x) - p;
    const double pdf =
        std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    if (pdf <= 0.0) break;
    x -= err / pdf;
  }
  return x;
}

B1Distribution B1Distribution::delta(double b1_tesla) {
  if (b1_tesla < 0.0) throw std::invalid_argument("B1 amplitude must be >= 0");
  B1Distribution d;
  d.samples_ = {{b1_tesla, 1.0}};
  return d;
}

B1Distribution B1Distribution::uniform(double min_tesla, double max_tesla,
                                       int sample_count) {
  if (min_tesla < 0.0 || max_tesla < min_tesla || sample_count < 1)
    throw std::invalid_argument("bad uniform B1 distribution");
  B1Distribution d;
  d.samples_.reserve(sample_count);
  for (int i = 0; i < sample_count; ++i) {
    const double p = (i + 0.5) / sample_count;
    d.samples_.emplace_back(min_tesla + p * (max_tesla - min_tesla),
                            1.0 / sample_count);
  }
  return d;
}

B1Distribution B1Distribution::gaussian(double mean_tesla, double sd_tesla,
                                        int sample_count) {
  if (sd_tesla <= 0.0 || sample_count < 1)
    throw std::invalid_argument("bad gaussian B1 distribution");
  const double p_below_zero = normal_cdf((0.0 - mean_tesla) / sd_tesla);
  B1Distribution d;
  d.samples_.reserve(sample_count);
  for (int i = 0; i < sample_count; ++i) {
    const double p = p_below_zero +
                     (i + 0.5) / sample_count * (1.0 - p_below_zero);
    d.samples_.emplace_back(mean_tesla + sd_tesla * inverse_normal_cdf(p),
                            1.0 / sample_count);
  }
  return d;
}

B1Distribution B1Distribution::empirical(
    std::vector<std::pair<double, double>> amplitude_weight) {
  double total = 0.0;
  for (const auto& [b1, w] : amplitude_weight) {
    if (b1 < 0.0 || w < 0.0)
      throw std::invalid_argument("empirical B1 entries must be >= 0");
    total += w;
  }
  if (total <= 0.0)
    throw std::invalid_argument("empirical B1 weights must not all vanish");
  for (auto& [b1, w] : amplitude_weight) w /= total;
  B1Distribution d;
  d.samples_ = std::move(amplitude_weight);
  return d;
}

double B1Distribution::mean() const {
  double m = 0.0;
  for (const auto& [b1, w] : samples_) m += b1 * w;
  return m;
}

double drive_frequency(const SpinSpecies& species, double b1_tesla) {
  if (species.kind == SpinKind::Electron)
    return species.g_or_gamma * constants.bohr_magneton * b1_tesla /
           constants.hbar;
  return kTwoPi * species.g_or_gamma * b1_tesla;
}

Matrix rotating_frame_hamiltonian(const SpinSystem& system, double b0_tesla,
                                  const PulseEvent& event,
                                  double frame_frequency_hz) {
  const SpinKind addressed = channel_kind(event.channel);
  bool found = false;
  for (const auto& sp : system.species()) found |= (sp.kind == addressed);
  if (!found)
    throw std::invalid_argument("pulse channel addresses no species in the system");
  if (event.duration_s < 0.0 || event.b1_tesla < 0.0)
    throw std::invalid_argument("pulse duration and amplitude must be >= 0");

  const double omega_carrier =
      kTwoPi * (frame_frequency_hz + event.carrier_offset_hz);
  const int dim = system.dimension();
  Matrix h = Matrix::Zero(dim, dim);
  const auto& species = system.species();
  for (int s = 0; s < static_cast<int>(species.size()); ++s) {
    const double w0 = zeeman_coefficient(species[s], b0_tesla);
    if (species[s].kind == addressed) {
      const double sign = w0 >= 0.0 ? 1.0 : -1.0;
      h += (w0 - sign * omega_carrier) * system.jz(s);
      const double w1 = drive_frequency(species[s], event.b1_tesla);
      h += w1 * (std::cos(event.phase_rad) * system.jx(s) +
                 std::sin(event.phase_rad) * system.jy(s));
    } else {
      h += w0 * system.jz(s);
    }
  }
  // Secular hyperfine survives the rotating-wave truncation.
  for (const auto& c : system.couplings())
    h += kTwoPi * c.a_hz * system.jz(c.electron_index) * system.jz(c.nuclear_index);
  return 0.5 * (h + Matrix(h.adjoint()));
}

Matrix frame_static_hamiltonian(const SpinSystem& system, double b0_tesla,
                                double frame_frequency_hz) {
  PulseEvent idle;
  idle.channel = PulseChannel::Microwave;
  idle.b1_tesla = 0.0;
  return rotating_frame_hamiltonian(system, b0_tesla, idle, frame_frequency_hz);
}

Matrix observable_matrix(const SpinSystem& system, const Detection& detection) {
  switch (detection.observable) {
    case Observable::Sz:
      return system.jz(detection.species_index);
    case Observable::Sx:
      return system.jx(detection.species_index);
    case Observable::Sy:
    case Observable::EchoIntegral:
      // The echo integral is read as the in-phase transverse component.
      return system.jy(detection.species_index);
  }
  throw std::invalid_argument("unknown observable");
}

DensityState run_pulse_sequence(const SpinSystem& system, double b0_tesla,
                                const PulseSequence& sequence,
                                const DensityState& initial, double b1_scale) {
  // RF events are referenced to the first nuclear species' Larmor
  // frequency (doubly rotating frame; inter-frame phases are not
  // tracked, which is exact for population-transfer detection).
  double rf_reference_hz = 0.0;
  for (const auto& sp : system.species())
    if (sp.kind == SpinKind::Nuclear) {
      rf_reference_hz = std::abs(sp.g_or_gamma) * b0_tesla;
      break;
    }

  double total_duration = 0.0;
  for (const auto& ev : sequence.events)
    total_duration += std::holds_alternative<Delay>(ev)
                          ? std::get<Delay>(ev).duration_s
                          : std::get<PulseEvent>(ev).duration_s;
  if (!std::isfinite(total_duration))
    throw std::invalid_argument("pulse sequence duration must be finite");

  DensityState rho = initial;
  for (const auto& ev : sequence.events) {
    if (std::holds_alternative<Delay>(ev)) {
      const auto& delay = std::get<Delay>(ev);
      rho = evolve(rho,
                   frame_static_hamiltonian(system, b0_tesla,
                                            sequence.frame_frequency_hz),
                   delay.duration_s);
    } else {
      PulseEvent pulse = std::get<PulseEvent>(ev);
      pulse.b1_tesla *= b1_scale;
      const double reference = pulse.channel == PulseChannel::Microwave
                                   ? sequence.frame_frequency_hz
                                   : rf_reference_hz;
      rho = evolve(rho,
                   rotating_frame_hamiltonian(system, b0_tesla, pulse, reference),
                   pulse.duration_s);
    }
  }
  return rho;
}

namespace {

double default_frame_hz(const SpinSystem& system, const Detection& detection,
                        double b0_tesla, const NutationOptions& options) {
  if (options.frame_frequency_hz) return *options.frame_frequency_hz;
  const auto& sp = system.species()[detection.species_index];
  return std::abs(zeeman_coefficient(sp, b0_tesla)) / kTwoPi;
}

void check_grid(const std::vector<double>& tp_grid) {
  if (tp_grid.empty()) throw std::invalid_argument("pulse-length grid is empty");
  if (!std::is_sorted(tp_grid.begin(), tp_grid.end()))
    throw std::invalid_argument("pulse-length grid must be ascending");
  if (tp_grid.front() < 0.0)
    throw std::invalid_argument("pulse lengths must be >= 0");
}

}  // namespace

Series rabi_nutation(const SpinSystem& system, double b0_tesla,
                     const B1Distribution& dist,
                     const std::vector<double>& tp_grid_s,
                     const Detection& detection, NutationOptions options) {
  check_grid(tp_grid_s);
  const double frame_hz = default_frame_hz(system, detection, b0_tesla, options);
  const DensityState rho0 =
      thermal_state(lab_hamiltonian(system, b0_tesla), options.temperature_k);
  const Matrix obs = observable_matrix(system, detection);
  const double signal0 = expectation(rho0, obs);

  std::vector<double> signal(tp_grid_s.size(), 0.0);
  for (const auto& [b1, weight] : dist.samples()) {
    PulseEvent pulse;
    pulse.channel = system.species()[detection.species_index].kind ==
                            SpinKind::Electron
                        ? PulseChannel::Microwave
                        : PulseChannel::Rf;
    pulse.b1_tesla = b1;
    pulse.phase_rad = options.phase_rad;
    pulse.carrier_offset_hz = options.carrier_offset_hz;
    const EigenH eig = decompose(
        rotating_frame_hamiltonian(system, b0_tesla, pulse, frame_hz));
    for (std::size_t i = 0; i < tp_grid_s.size(); ++i) {
      const Matrix u = propagator(eig, tp_grid_s[i]);
      signal[i] += weight * (u * rho0.rho * u.adjoint() * obs).trace().real();
    }
  }

  Series out;
  out.reserve(tp_grid_s.size());
  const bool norm = options.normalize && std::abs(signal0) > 1e-14;
  for (std::size_t i = 0; i < tp_grid_s.size(); ++i)
    out.emplace_back(tp_grid_s[i], norm ? signal[i] / signal0 : signal[i]);
  return out;
}

Series hahn_echo_rabi(const SpinSystem& system, double b0_tesla,
                      const B1Distribution& dist,
                      const std::vector<double>& tp_grid_s, double tau_s,
                      double t2_s, NutationOptions options) {
  check_grid(tp_grid_s);
  if (tau_s <= 0.0) throw std::invalid_argument("echo delay tau must be > 0");
  if (t2_s <= 0.0) throw std::invalid_argument("T2 must be > 0");

  Detection detection{Observable::EchoIntegral, -1};
  for (int s = 0; s < static_cast<int>(system.species().size()); ++s)
    if (system.species()[s].kind == SpinKind::Electron) {
      detection.species_index = s;
      break;
    }
  if (detection.species_index < 0)
    throw std::invalid_argument("Hahn echo needs an electron species");

  const double frame_hz = default_frame_hz(system, detection, b0_tesla, options);
  const DensityState rho0 =
      thermal_state(lab_hamiltonian(system, b0_tesla), options.temperature_k);
  const Matrix obs = observable_matrix(system, detection);

  const double w1_mean = std::abs(
      drive_frequency(system.species()[detection.species_index], dist.mean()));
  if (w1_mean <= 0.0)
    throw std::invalid_argument("B1 distribution mean must be > 0 for an echo");
  // Refocusing pulse calibrated to pi at the ensemble-mean amplitude;
  // off-mean samples refocus imperfectly, as in the experiment.
  const double t_pi = std::numbers::pi / w1_mean;

  const EigenH eig_static = decompose(
      frame_static_hamiltonian(system, b0_tesla, frame_hz));
  const Matrix u_tau = propagator(eig_static, tau_s);

  std::vector<double> signal(tp_grid_s.size(), 0.0);
  for (const auto& [b1, weight] : dist.samples()) {
    PulseEvent pulse;
    pulse.channel = PulseChannel::Microwave;
    pulse.b1_tesla = b1;
    pulse.phase_rad = options.phase_rad;
    pulse.carrier_offset_hz = options.carrier_offset_hz;
    const EigenH eig_pulse = decompose(
        rotating_frame_hamiltonian(system, b0_tesla, pulse, frame_hz));
    const Matrix tail = u_tau * propagator(eig_pulse, t_pi) * u_tau;
    const Matrix obs_eff = tail.adjoint() * obs * tail;
    for (std::size_t i = 0; i < tp_grid_s.size(); ++i) {
      const Matrix u1 = propagator(eig_pulse, tp_grid_s[i]);
      signal[i] +=
          weight * (u1 * rho0.rho * u1.adjoint() * obs_eff).trace().real();
    }
  }

  const double decay = std::exp(-2.0 * tau_s / t2_s);
  Series out;
  out.reserve(tp_grid_s.size());
  for (std::size_t i = 0; i < tp_grid_s.size(); ++i)
    out.emplace_back(tp_grid_s[i], decay * signal[i]);
  return out;
}

double excitation_bandwidth(double t_p_s) {
  if (t_p_s <= 0.0) throw std::invalid_argument("pulse length must be > 0");
  return 1.0 / t_p_s;
}

double excitation_profile(double t_p_s, double detuning_hz) {
  if (t_p_s <= 0.0) throw std::invalid_argument("pulse length must be > 0");
  const double x = std::numbers::pi * detuning_hz * t_p_s;
  if (std::abs(x) < 1e-12) return 1.0;
  const double s = std::sin(x) / x;
  return s * s;
}

Selectivity selectivity(double t_p_s, double separation_hz) {
  const double weight = excitation_profile(t_p_s, separation_hz);
  return Selectivity{weight < 0.01, weight};
}

double figure_of_merit(double t2_s, double t_op_s) {
  if (t2_s <= 0.0 || t_op_s <= 0.0)
    throw std::invalid_argument("figure_of_merit requires positive times");
  return t2_s / t_op_s;
}

int count_resolvable_extrema(const Series& trace, double threshold_fraction) {
  if (trace.size() < 3) return 0;
  const double reference = std::abs(trace.front().second);
  if (reference <= 0.0) return 0;
  int count = 0;
  for (std::size_t i = 1; i + 1 < trace.size(); ++i) {
    const double prev = trace[i - 1].second;
    const double here = trace[i].second;
    const double next = trace[i + 1].second;
    const bool is_max = here > prev && here > next;
    const bool is_min = here < prev && here < next;
    if ((is_max || is_min) && std::abs(here) >= threshold_fraction * reference)
      ++count;
  }
  return count;
}

PulseSequence hahn_echo_sequence(double tp1_s, double tp2_s, double tau_s,
                                 double b1_tesla, double frame_frequency_hz,
                                 Detection detection) {
  PulseSequence seq;
  seq.frame_frequency_hz = frame_frequency_hz;
  seq.detection = detection;
  seq.events = {PulseEvent{PulseChannel::Microwave, tp1_s, b1_tesla, 0.0, 0.0},
                Delay{tau_s},
                PulseEvent{PulseChannel::Microwave, tp2_s, b1_tesla, 0.0, 0.0},
                Delay{tau_s}};
  return seq;
}

PulseSequence mims_endor_sequence(double tp90_s, double tau_s, double b1_tesla,
                                  double mix_s, double rf_duration_s,
                                  double rf_b1_tesla, double rf_offset_hz,
                                  double frame_frequency_hz,
                                  Detection detection) {
  if (mix_s < rf_duration_s)
    throw std::invalid_argument("mixing period shorter than the RF pulse");
  const double pad = 0.5 * (mix_s - rf_duration_s);
  PulseSequence seq;
  seq.frame_frequency_hz = frame_frequency_hz;
  seq.detection = detection;
  seq.events = {PulseEvent{PulseChannel::Microwave, tp90_s, b1_tesla, 0.0, 0.0},
                Delay{tau_s},
                PulseEvent{PulseChannel::Microwave, tp90_s, b1_tesla, 0.0, 0.0},
                Delay{pad},
                PulseEvent{PulseChannel::Rf, rf_duration_s, rf_b1_tesla, 0.0,
                           rf_offset_hz},
                Delay{pad},
                PulseEvent{PulseChannel::Microwave, tp90_s, b1_tesla, 0.0, 0.0},
                Delay{tau_s}};
  return seq;
}

}  // namespace hfepr
