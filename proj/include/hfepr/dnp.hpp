// Four-level (S=1/2, I=1/2) nuclear polarization dynamics: Overhauser
// pumping, ENDOR-assisted pumping, and nuclear T1N extraction from
// rate-equation trajectories.

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hfepr/spin.hpp"

namespace hfepr {

// Product states are indexed |m_S, m_I> with m = +1/2 listed first:
//   0 = |+1/2, +1/2>, 1 = |+1/2, -1/2>, 2 = |-1/2, +1/2>, 3 = |-1/2, -1/2>.
// Level energies are computed from the exact four-level Hamiltonian,
// never assumed from the ordering.
struct FourLevelSystem {
  double nu_e_hz = 240e9;  // electron Zeeman, > 0
  double nu_n_hz = 0.0;    // nuclear Zeeman (signed, gamma * B0)
  double a_hz = 0.0;       // isotropic hyperfine, >= 0
  double temp_k = 3.0;
  double w_e = 1.0;  // electron spin-lattice rate scale, > 0
  double w_n = 0.0;  // intrinsic nuclear flip rate scale, >= 0
  // Forbidden flip-flop rate is eta^2 w_e with eta = a / (2 nu_e)
  // (first-order state mixing) unless overridden.
  std::optional<double> eta_override;

  double eta() const;
};

// Drive targets: the two allowed EPR transitions (selected by the
// spectator m_I) and the two nuclear (ENDOR) transitions (selected by
// the spectator m_S).
enum class DriveTarget { EprMiPlus, EprMiMinus, NuclearMsPlus, NuclearMsMinus };

struct DriveSpec {
  DriveTarget target = DriveTarget::EprMiMinus;
  double saturation_rate = 0.0;  // s^-1, added symmetrically
};

// The spin-core view of the same system (for thermal-state oracles).
SpinSystem four_level_spin_system(const FourLevelSystem& sys);
Matrix four_level_hamiltonian(const FourLevelSystem& sys);

// Exact level energies in rad/s, indexed by product label.
Eigen::Vector4d four_level_energies(const FourLevelSystem& sys);

// 4x4 population generator: allowed EPR rates w_e, forbidden flip-flop
// rate eta^2 w_e between |+-> and |-+> only, nuclear rates w_n, all
// with Boltzmann detailed balance across the exact level energies;
// symmetric saturation rates for each drive. The flip-flip channel
// |++> <-> |--> is never written (structurally zero).
Eigen::Matrix4d build_dnp_rate_matrix(const FourLevelSystem& sys,
                                      const std::vector<DriveSpec>& drives);

// Indices of the structurally forbidden flip-flip pair.
constexpr std::pair<int, int> flip_flip_pair() { return {0, 3}; }

// Normalized null vector of the generator (steady-state populations).
Eigen::Vector4d dnp_steady_state(const Eigen::Matrix4d& generator);

// Nuclear / electron polarization of a population vector; +1 means
// fully in the energetically lower Zeeman level of that spin.
double nuclear_polarization(const Eigen::Vector4d& populations,
                            const FourLevelSystem& sys);
double electron_polarization(const Eigen::Vector4d& populations,
                             const FourLevelSystem& sys);

// Boltzmann populations of the four levels (product-state labels).
Eigen::Vector4d thermal_populations(const FourLevelSystem& sys);

using Series = std::vector<std::pair<double, double>>;

struct DnpTrajectory {
  Series nuclear_polarization;  // (t_s, P_n)
  Eigen::Vector4d final_populations = Eigen::Vector4d::Zero();
  std::vector<std::string> warnings;
};

// Saturates one EPR hyperfine line and integrates the generator.
DnpTrajectory simulate_overhauser_pump(const FourLevelSystem& sys,
                                       const DriveSpec& pump,
                                       double pump_duration_s,
                                       int n_points = 200);

enum class EndorSchedule { Cw, SequentialPulses };

struct EndorOptions {
  EndorSchedule schedule = EndorSchedule::Cw;
  double segment_s = 0.0;  // per-drive segment length for pulsed mode
  int n_points = 200;
};

// Microwave + RF saturation; polarization of either sign is reachable
// depending on the transition pair.
DnpTrajectory simulate_endor_assisted(const FourLevelSystem& sys,
                                      const DriveSpec& microwave,
                                      const DriveSpec& rf,
                                      double duration_s,
                                      EndorOptions options = {});

// Time for P_n to close 90% of the gap to its steady-state value under
// a constant generator.
double time_to_steady_fraction(const FourLevelSystem& sys,
                               const Eigen::Matrix4d& generator,
                               const Eigen::Vector4d& initial,
                               double fraction = 0.9);

struct T1nResult {
  std::vector<std::pair<double, double>> t1n_per_temp;  // (T_k, T1N_s)
  double delta_e_k = 0.0;       // fitted activation energy
  double prefactor_per_s = 0.0;
  std::string quality_flag;     // "non-exponential" when the decay is not
};

// Free decay of nuclear polarization under the undriven generator at
// each temperature; single-exponential time per temperature, then an
// Arrhenius fit of 1/T1N vs 1/T. Temperatures must number >= 3 and span
// a factor >= 1.5. `w_e_per_temp` optionally rescales w_e per
// temperature (electron T1 is itself temperature dependent).
T1nResult extract_t1n(const FourLevelSystem& sys,
                      const std::vector<double>& temperatures_k,
                      const std::vector<double>& w_e_per_temp = {});

// Si:P donor defaults (literature values, not fitted here): isotropic
// 31P hyperfine a = 117.5 MHz, g = 1.9985, nu_n from gamma_31P at the
// field matching nu_e.
FourLevelSystem si_p_system(double nu_e_hz, double temp_k, double w_e,
                            double w_n = 0.0);

}  // namespace hfepr
