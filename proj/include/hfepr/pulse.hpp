// Rotating-frame pulse propagation: Rabi nutation, Hahn-echo and Mims
// ENDOR sequences, B1 ensemble averaging, excitation bandwidth.

#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "hfepr/density.hpp"
#include "hfepr/spin.hpp"

namespace hfepr {

enum class PulseChannel { Microwave, Rf };

struct PulseEvent {
  PulseChannel channel = PulseChannel::Microwave;
  double duration_s = 0.0;
  double b1_tesla = 0.0;
  double phase_rad = 0.0;
  // Detuning of the pulse carrier from the frame reference frequency.
  double carrier_offset_hz = 0.0;
};

struct Delay {
  double duration_s = 0.0;
};

using SequenceEvent = std::variant<PulseEvent, Delay>;

enum class Observable { Sz, Sx, Sy, EchoIntegral };

struct Detection {
  Observable observable = Observable::Sz;
  int species_index = 0;
};

struct PulseSequence {
  std::vector<SequenceEvent> events;
  Detection detection;
  double frame_frequency_hz = 0.0;  // reference frame (microwave carrier)
};

// Distribution of drive-field amplitudes across the sample. Sampling is
// deterministic: equal-weight stratified quantile samples (no RNG), so
// ensemble averages are reproducible bit for bit.
class B1Distribution {
 public:
  static B1Distribution delta(double b1_tesla);
  static B1Distribution uniform(double min_tesla, double max_tesla,
                                int sample_count = kDefaultSamples);
  // Gaussian truncated at zero amplitude.
  static B1Distribution gaussian(double mean_tesla, double sd_tesla,
                                 int sample_count = kDefaultSamples);
  static B1Distribution empirical(
      std::vector<std::pair<double, double>> amplitude_weight);

  static constexpr int kDefaultSamples = 256;

  // (amplitude, weight) pairs; weights sum to 1.
  const std::vector<std::pair<double, double>>& samples() const {
    return samples_;
  }
  double mean() const;

 private:
  std::vector<std::pair<double, double>> samples_;
};

// Inverse standard-normal CDF (quantile function), p in (0, 1).
double inverse_normal_cdf(double p);

// Rotating-frame Hamiltonian for one pulse event (rad/s). Species of
// the addressed kind acquire detuning terms (Zeeman minus carrier) and
// the drive omega_1 (Sx cos phi + Sy sin phi); all other static terms
// that commute with the frame are kept (nuclear Zeeman during microwave
// events, secular hyperfine Sz.Iz); flip-flop terms are dropped with
// the counter-rotating ones.
Matrix rotating_frame_hamiltonian(const SpinSystem& system, double b0_tesla,
                                  const PulseEvent& event,
                                  double frame_frequency_hz);

// Free-evolution Hamiltonian between pulses, in the microwave frame.
Matrix frame_static_hamiltonian(const SpinSystem& system, double b0_tesla,
                                double frame_frequency_hz);

// Nutation / echo drive frequency of a species at amplitude b1 (rad/s):
// g mu_B B1 / hbar for electrons, 2 pi gamma B1 for nuclei.
double drive_frequency(const SpinSpecies& species, double b1_tesla);

// Propagates rho through the sequence; every pulse amplitude is
// multiplied by b1_scale (the ensemble knob).
DensityState run_pulse_sequence(const SpinSystem& system, double b0_tesla,
                                const PulseSequence& sequence,
                                const DensityState& initial,
                                double b1_scale = 1.0);

Matrix observable_matrix(const SpinSystem& system, const Detection& detection);

using Series = std::vector<std::pair<double, double>>;

struct NutationOptions {
  double carrier_offset_hz = 0.0;
  double phase_rad = 0.0;
  double temperature_k = 3.0;  // initial thermal state
  // Frame reference; defaults to the detected species' resonance.
  std::optional<double> frame_frequency_hz;
  bool normalize = true;  // divide by the t=0 detection value
};

// Ensemble-averaged single-pulse nutation signal vs pulse length.
Series rabi_nutation(const SpinSystem& system, double b0_tesla,
                     const B1Distribution& dist,
                     const std::vector<double>& tp_grid_s,
                     const Detection& detection, NutationOptions options = {});

// Two-pulse Hahn echo: variable first pulse, delay tau, refocusing
// pulse calibrated to pi at the distribution mean, delay tau. The echo
// amplitude carries the scalar factor exp(-2 tau / t2).
Series hahn_echo_rabi(const SpinSystem& system, double b0_tesla,
                      const B1Distribution& dist,
                      const std::vector<double>& tp_grid_s, double tau_s,
                      double t2_s, NutationOptions options = {});

// Pulse excitation bandwidth, full width in Hz: delta_nu = 1 / t_p.
double excitation_bandwidth(double t_p_s);

// sinc^2 excitation weight at a detuning (Hz) from the carrier,
// normalized to 1 on resonance.
double excitation_profile(double t_p_s, double detuning_hz);

struct Selectivity {
  bool addressable = false;
  double unwanted_weight = 1.0;  // profile weight at the unwanted line
};

// Two lines separated by |separation| are selectively addressable when
// the excitation weight at the unwanted line is below 1% of the
// on-resonance weight.
Selectivity selectivity(double t_p_s, double separation_hz);

// Q_M = T2 / T_op; both arguments must be > 0.
double figure_of_merit(double t2_s, double t_op_s);

// Counts interior local extrema whose magnitude is at least
// `threshold_fraction` of |y(0)|; used to grade nutation damping.
int count_resolvable_extrema(const Series& trace,
                             double threshold_fraction = 0.1);

// Sequence builders.
PulseSequence hahn_echo_sequence(double tp1_s, double tp2_s, double tau_s,
                                 double b1_tesla, double frame_frequency_hz,
                                 Detection detection);
// Stimulated-echo (pi/2 - tau - pi/2 - T - pi/2 - tau) skeleton with an
// RF pulse of the given carrier inside the mixing period T.
PulseSequence mims_endor_sequence(double tp90_s, double tau_s, double b1_tesla,
                                  double mix_s, double rf_duration_s,
                                  double rf_b1_tesla, double rf_offset_hz,
                                  double frame_frequency_hz,
                                  Detection detection);

}  // namespace hfepr
