#include "hfepr/relaxation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "hfepr/constants.hpp"

namespace hfepr {

double t1_rate(const T1Model& model, double nu_hz, double temp_k) {
  if (nu_hz <= 0.0 || temp_k <= 0.0)
    throw std::invalid_argument("t1_rate requires nu > 0 and T > 0");
  if (model.a_direct < 0.0 || model.a_orbach < 0.0 || model.delta_orbach_k < 0.0)
    throw std::invalid_argument("T1 model coefficients must be >= 0");
  if (model.n_exponent < 0.0 || model.n_exponent > 6.0)
    throw std::invalid_argument("T1 frequency exponent must be in [0, 6]");
  const double omega = 2.0 * std::numbers::pi * nu_hz;
  const double direct = model.a_direct * std::pow(omega, model.n_exponent) * temp_k;
  double orbach = 0.0;
  if (model.a_orbach > 0.0) {
    if (model.orbach_form == OrbachForm::Exponential)
      orbach = model.a_orbach * std::exp(-model.delta_orbach_k / temp_k);
    else
      orbach = model.a_orbach / std::expm1(model.delta_orbach_k / temp_k);
  }
  return direct + orbach;
}

double flip_flop_factor(double nu_hz, double temp_k) {
  if (nu_hz <= 0.0 || temp_k <= 0.0)
    throw std::invalid_argument("flip_flop_factor requires nu > 0 and T > 0");
  const double x = constants.planck_h * nu_hz /
                   (2.0 * constants.boltzmann_k * temp_k);
  const double c = 2.0 * std::cosh(x);
  return 1.0 / (c * c);
}

double t2_time(const T2Model& model, double nu_hz, double temp_k) {
  if (model.r_floor < 0.0 || model.c_flipflop < 0.0)
    throw std::invalid_argument("T2 model rates must be >= 0");
  if (model.r_floor == 0.0 && model.c_flipflop == 0.0)
    throw std::invalid_argument("T2 model needs at least one nonzero rate");
  return 1.0 / (model.r_floor + model.c_flipflop * flip_flop_factor(nu_hz, temp_k));
}

double kelvin_to_wavenumber(double kelvin) {
  // E = k T = h c nu~  ->  nu~ [cm^-1] = k T / (h c), c in cm/s.
  return constants.boltzmann_k * kelvin / (constants.planck_h * 2.99792458e10);
}

double wavenumber_to_kelvin(double per_cm) {
  return per_cm * constants.planck_h * 2.99792458e10 / constants.boltzmann_k;
}

Eigen::VectorXd rate_equation_step(const Eigen::VectorXd& populations,
                                   const Eigen::MatrixXd& rate_matrix,
                                   double time_s) {
  const auto n = rate_matrix.rows();
  if (rate_matrix.cols() != n || populations.size() != n)
    throw std::invalid_argument("rate matrix and population sizes mismatch");
  if (time_s < 0.0) throw std::invalid_argument("time must be >= 0");
  const double scale = std::max(1.0, rate_matrix.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(rate_matrix.col(j).sum()) > 1e-9 * scale)
      throw std::invalid_argument("generator columns must sum to zero");
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && rate_matrix(i, j) < -1e-12 * scale)
        throw std::invalid_argument("generator off-diagonals must be >= 0");
  }
  if (std::abs(populations.sum() - 1.0) > 1e-9 ||
      populations.minCoeff() < -1e-12)
    throw std::invalid_argument("populations must form a probability vector");

  const Eigen::MatrixXd propagator = (rate_matrix * time_s).exp();
  return propagator * populations;
}

Eigen::MatrixXd two_level_generator(double rate_down, double gap_kelvin,
                                    double temp_k) {
  if (rate_down < 0.0 || temp_k <= 0.0)
    throw std::invalid_argument("two_level_generator: bad parameters");
  const double up = rate_down * std::exp(-gap_kelvin / temp_k);
  Eigen::MatrixXd r(2, 2);
  // State 0 = lower level, state 1 = upper level.
  r << -up, rate_down, up, -rate_down;
  return r;
}

}  // namespace hfepr
