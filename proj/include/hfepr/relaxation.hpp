// Closed-form spin-lattice and spin-spin relaxation laws, and
// population rate-equation propagation with detailed balance.

#pragma once

#include <Eigen/Dense>

namespace hfepr {

enum class OrbachForm { Exponential, Bose };

// T1^-1(nu, T) = a_direct (2 pi nu)^n T + a_orbach f(delta, T) with
// f = exp(-delta/T) or the Bose form 1/(exp(delta/T) - 1).
struct T1Model {
  double a_direct = 0.0;    // s^-1 Hz^-n K^-1 (angular-frequency power)
  double n_exponent = 4.0;  // in [0, 6]
  double a_orbach = 0.0;    // s^-1
  double delta_orbach_k = 0.0;  // activation energy in K
  OrbachForm orbach_form = OrbachForm::Exponential;
};

// 1/T2(nu, T) = r_floor + c_flipflop (2 cosh(h nu / 2 k T))^-2.
struct T2Model {
  double r_floor = 0.0;     // s^-1, field/temperature independent
  double c_flipflop = 0.0;  // s^-1, flip-flop strength before the 1/4 factor
};

double t1_rate(const T1Model& model, double nu_hz, double temp_k);

// (2 cosh(h nu / 2 k T))^-2; equals p_up * p_down of the two-level
// thermal state. Range (0, 1/4].
double flip_flop_factor(double nu_hz, double temp_k);

double t2_time(const T2Model& model, double nu_hz, double temp_k);

// Energy-in-kelvin <-> wavenumber conversions for reporting.
double kelvin_to_wavenumber(double kelvin);
double wavenumber_to_kelvin(double per_cm);

// p(t) = exp(R t) p(0) for a generator R (columns sum to zero,
// off-diagonals >= 0). Throws std::invalid_argument on a malformed
// generator or population vector.
Eigen::VectorXd rate_equation_step(const Eigen::VectorXd& populations,
                                   const Eigen::MatrixXd& rate_matrix,
                                   double time_s);

// Builds the 2x2 generator with downward rate w and Boltzmann-balanced
// upward rate across an energy gap expressed in kelvin.
Eigen::MatrixXd two_level_generator(double rate_down, double gap_kelvin,
                                    double temp_k);

}  // namespace hfepr
