// Nonlinear least squares (damped Gauss-Newton with adaptive
// Levenberg-style damping) plus the relaxation-specific fits built on
// it: T1(nu, T) direct+Orbach, Arrhenius and single-exponential decay.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hfepr/relaxation.hpp"

namespace hfepr {

// One observation row: independent variables (any of nu/T/t may be
// unused by a given model), observed value, optional sigma (0 = none).
struct DataRow {
  double nu_hz = 0.0;
  double temp_k = 0.0;
  double t_s = 0.0;
  double value = 0.0;
  double sigma = 0.0;
};

struct DataSet {
  std::vector<DataRow> rows;
  std::string provenance;
};

struct FitResult {
  Eigen::VectorXd parameters;
  Eigen::VectorXd uncertainties;  // 1-sigma, linearized covariance
  double residual_norm = 0.0;     // sqrt(sum of squared weighted residuals)
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history;  // norm after each accepted step
  std::string flag;  // non-empty for quality problems (e.g. "no-convergence")
};

// model(parameters, row) -> predicted value for that row's independent
// variables.
using ParametricModel =
    std::function<double(const Eigen::VectorXd&, const DataRow&)>;

struct FitOptions {
  Eigen::VectorXd lower_bounds;  // empty = unbounded
  Eigen::VectorXd upper_bounds;
  int max_iterations = 500;
  double step_tolerance = 1e-10;      // relative step size
  double residual_tolerance = 1e-12;  // relative residual change
};

// Minimizes sum_i w_i (model(theta, row_i) - value_i)^2 with
// w_i = 1/sigma_i^2 when sigmas are present. Jacobian by forward finite
// differences. Steps are accepted only when the residual decreases;
// failure to escape a singular Jacobian yields a flagged result, not an
// exception. Throws std::invalid_argument when init violates bounds or
// the data set is smaller than parameters + 1.
FitResult fit_damped_least_squares(const ParametricModel& model,
                                   const DataSet& data,
                                   const Eigen::VectorXd& init,
                                   const FitOptions& options = {});

struct T1FitSettings {
  bool fix_exponent = false;
  double fixed_exponent = 4.0;
  OrbachForm orbach_form = OrbachForm::Exponential;
};

// Fits rate = a_direct (2 pi nu)^n T + a_orbach exp(-delta/T) in
// log-rate space (rates span decades). Parameters ordered
// {a_direct, n, a_orbach, delta_k}. Data with a single frequency and a
// free exponent is ill-posed: the exponent is forced fixed and the
// result flagged.
struct T1FitResult {
  T1Model model;
  FitResult fit;
};
T1FitResult fit_t1_model(const DataSet& data, T1FitSettings settings = {});

// 1/T1N = A exp(-delta_e / T) by linear regression of ln(rate) on 1/T.
// Data rows carry (temp_k, value = decay time in s).
struct ArrheniusFit {
  double prefactor_per_s = 0.0;
  double delta_e_k = 0.0;
  double delta_e_sigma_k = 0.0;
  double residual_norm = 0.0;
};
ArrheniusFit fit_arrhenius(const DataSet& data);

// y(t) = amplitude * exp(-t / tau) + offset. Returns a flagged result
// when the trace does not decay.
struct ExponentialFit {
  double amplitude = 0.0;
  double tau_s = 0.0;
  double offset = 0.0;
  bool converged = false;
  std::string flag;
};
ExponentialFit fit_exponential_decay(const std::vector<double>& t_s,
                                     const std::vector<double>& y);

// Synthetic data with seeded multiplicative log-normal noise:
// value = truth * exp(noise_fraction * z), z ~ N(0,1) from the
// counter-based stream.
DataSet make_synthetic_t1_data(const T1Model& truth,
                               const std::vector<double>& frequencies_hz,
                               const std::vector<double>& temperatures_k,
                               double noise_fraction, std::uint64_t seed);

}  // namespace hfepr
