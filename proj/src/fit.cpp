#include "hfepr/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "hfepr/rng.hpp"

namespace hfepr {

namespace {

Eigen::VectorXd clamp_to_bounds(Eigen::VectorXd theta,
                                const FitOptions& options) {
  if (options.lower_bounds.size())
    theta = theta.cwiseMax(options.lower_bounds);
  if (options.upper_bounds.size())
    theta = theta.cwiseMin(options.upper_bounds);
  return theta;
}

bool within_bounds(const Eigen::VectorXd& theta, const FitOptions& options) {
  if (options.lower_bounds.size() &&
      (theta.array() < options.lower_bounds.array()).any())
    return false;
  if (options.upper_bounds.size() &&
      (theta.array() > options.upper_bounds.array()).any())
    return false;
  return true;
}

}  // namespace

FitResult fit_damped_least_squares(const ParametricModel& model,
                                   const DataSet& data,
                                   const Eigen::VectorXd& init,
                                   const FitOptions& options) {
  const int n_params = static_cast<int>(init.size());
  const int n_rows = static_cast<int>(data.rows.size());
  if (n_rows < std::max(3, n_params + 1))
    throw std::invalid_argument("too few data rows for the number of parameters");
  if (!within_bounds(init, options))
    throw std::invalid_argument("initial parameters violate the bounds");
  if (options.lower_bounds.size() &&
      options.lower_bounds.size() != init.size())
    throw std::invalid_argument("bound vector size mismatch");
  if (options.upper_bounds.size() &&
      options.upper_bounds.size() != init.size())
    throw std::invalid_argument("bound vector size mismatch");

  Eigen::VectorXd weights(n_rows);
  for (int i = 0; i < n_rows; ++i) {
    const double sigma = data.rows[i].sigma;
    if (sigma < 0.0) throw std::invalid_argument("sigmas must be > 0");
    weights(i) = sigma > 0.0 ? 1.0 / sigma : 1.0;
  }

  const auto residuals = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd r(n_rows);
    for (int i = 0; i < n_rows; ++i)
      r(i) = weights(i) * (model(theta, data.rows[i]) - data.rows[i].value);
    return r;
  };

  // The solver works in scaled coordinates phi = theta / typical:
  // parameters here span many decades (direct-process prefactors near
  // 1e-46 against energies near 1e2) and the raw normal equations are
  // unsolvable in double precision. Typical scales freeze at init;
  // zero-valued parameters fall back to unit scale.
  Eigen::VectorXd typical(n_params);
  for (int j = 0; j < n_params; ++j)
    typical(j) = std::abs(init(j)) > 0.0 ? std::abs(init(j)) : 1.0;
  const auto to_raw = [&](const Eigen::VectorXd& phi) {
    return Eigen::VectorXd(typical.cwiseProduct(phi));
  };

  FitOptions scaled = options;
  if (scaled.lower_bounds.size())
    scaled.lower_bounds = scaled.lower_bounds.cwiseQuotient(typical);
  if (scaled.upper_bounds.size())
    scaled.upper_bounds = scaled.upper_bounds.cwiseQuotient(typical);

  const auto residuals_at = [&](const Eigen::VectorXd& phi) {
    return residuals(to_raw(phi));
  };
  const auto jacobian = [&](const Eigen::VectorXd& phi,
                            const Eigen::VectorXd& r0) {
    Eigen::MatrixXd jac(n_rows, n_params);
    for (int j = 0; j < n_params; ++j) {
      const double h = 1e-7 * std::max(std::abs(phi(j)), 1.0);
      Eigen::VectorXd shifted = phi;
      shifted(j) += h;
      jac.col(j) = (residuals_at(shifted) - r0) / h;
    }
    return jac;
  };

  FitResult result;
  Eigen::VectorXd phi = init.cwiseQuotient(typical);
  Eigen::VectorXd r = residuals_at(phi);
  double cost = r.squaredNorm();
  result.residual_history.push_back(std::sqrt(cost));

  double damping = 1e-3;
  bool converged = false;
  int iteration = 0;
  Eigen::MatrixXd jac = jacobian(phi, r);
  for (; iteration < options.max_iterations && !converged; ++iteration) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal();
    const double diag_floor = std::max(diag.maxCoeff(), 1e-300) * 1e-12;
    diag = diag.cwiseMax(diag_floor);

    bool accepted = false;
    while (!accepted && damping < 1e14) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += damping * diag;
      const Eigen::VectorXd step = lhs.ldlt().solve(-gradient);
      if (!step.allFinite()) {
        damping *= 10.0;
        continue;
      }
      const Eigen::VectorXd trial = clamp_to_bounds(phi + step, scaled);
      const Eigen::VectorXd r_trial = residuals_at(trial);
      const double cost_trial = r_trial.squaredNorm();
      if (cost_trial < cost && r_trial.allFinite()) {
        const double rel_step =
            (trial - phi).norm() / std::max(phi.norm(), 1.0);
        const double rel_drop = (cost - cost_trial) / std::max(cost, 1e-300);
        phi = trial;
        r = r_trial;
        cost = cost_trial;
        result.residual_history.push_back(std::sqrt(cost));
        damping = std::max(damping * 0.3, 1e-12);
        accepted = true;
        // The residual-change test is only meaningful near a pure
        // Gauss-Newton step; a heavily damped crawl stalls too early.
        if (rel_step < options.step_tolerance ||
            (rel_drop < options.residual_tolerance && damping <= 1e-6))
          converged = true;
        else
          jac = jacobian(phi, r);
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted) {
      // Damping escape failed: either we sit at a (possibly bounded)
      // minimum, or the Jacobian is singular. Accept as converged only
      // when the first-order conditions hold on the feasible set.
      bool stationary = cost < 1e-300;
      if (!stationary) {
        stationary = true;
        const double r_norm = std::sqrt(cost);
        for (int j = 0; j < n_params && stationary; ++j) {
          const double scale = jac.col(j).norm() * r_norm + 1e-300;
          if (std::abs(gradient(j)) <= 1e-6 * scale) continue;
          const bool pushed_below = scaled.lower_bounds.size() &&
                                    phi(j) <= scaled.lower_bounds(j) &&
                                    gradient(j) > 0.0;
          const bool pushed_above = scaled.upper_bounds.size() &&
                                    phi(j) >= scaled.upper_bounds(j) &&
                                    gradient(j) < 0.0;
          if (!pushed_below && !pushed_above) stationary = false;
        }
      }
      if (stationary)
        converged = true;
      else
        result.flag = "no-convergence";
      break;
    }
  }

  result.parameters = to_raw(phi);
  result.residual_norm = std::sqrt(cost);
  result.iterations = iteration;
  result.converged = converged;
  if (converged) {
    result.flag.clear();
    // Linearized covariance at the optimum, scaled by reduced chi^2,
    // mapped back to raw units.
    jac = jacobian(phi, r);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const double dof = std::max(1, n_rows - n_params);
    const double scale = cost / dof;
    Eigen::MatrixXd reg = jtj;
    reg.diagonal() += Eigen::VectorXd::Constant(
        n_params, std::max(jtj.diagonal().maxCoeff(), 1e-300) * 1e-14);
    const Eigen::MatrixXd cov = reg.inverse() * scale;
    result.uncertainties =
        typical.cwiseProduct(cov.diagonal().cwiseMax(0.0).cwiseSqrt());
  } else if (result.flag.empty()) {
    result.flag = "no-convergence";
  }
  return result;
}

namespace {

double t1_log_rate(const T1Model& model, const DataRow& row) {
  return std::log(std::max(t1_rate(model, row.nu_hz, row.temp_k), 1e-300));
}

DataSet to_log_rates(const DataSet& data) {
  DataSet out;
  out.provenance = data.provenance;
  out.rows.reserve(data.rows.size());
  for (const auto& row : data.rows) {
    if (row.value <= 0.0)
      throw std::invalid_argument("T1 rates must be > 0 for a log-space fit");
    DataRow r = row;
    r.value = std::log(row.value);
    r.sigma = row.sigma > 0.0 ? row.sigma / row.value : 0.0;
    out.rows.push_back(r);
  }
  return out;
}

}  // namespace

T1FitResult fit_t1_model(const DataSet& data, T1FitSettings settings) {
  std::set<double> frequencies;
  for (const auto& row : data.rows) frequencies.insert(row.nu_hz);
  std::string flag;
  if (frequencies.size() < 2 && !settings.fix_exponent) {
    // Exponent and prefactor are degenerate on single-frequency data.
    settings.fix_exponent = true;
    flag = "single-frequency: exponent fixed";
  }

  const DataSet log_data = to_log_rates(data);

  // Data-driven initial guesses. Lowest-temperature rows estimate the
  // direct term per frequency; the hottest rows estimate the Orbach
  // excess.
  double t_min = data.rows.front().temp_k, t_max = t_min;
  for (const auto& row : data.rows) {
    t_min = std::min(t_min, row.temp_k);
    t_max = std::max(t_max, row.temp_k);
  }
  std::vector<std::pair<double, double>> low_t;  // (ln 2pi nu, ln rate - ln T)
  for (const double nu : frequencies) {
    const DataRow* best = nullptr;
    for (const auto& row : data.rows)
      if (row.nu_hz == nu && (!best || row.temp_k < best->temp_k)) best = &row;
    low_t.emplace_back(std::log(2.0 * std::numbers::pi * nu),
                       std::log(best->value) - std::log(best->temp_k));
  }
  double n_init = settings.fixed_exponent;
  if (!settings.fix_exponent && low_t.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : low_t) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = low_t.size();
    const double denom = m * sxx - sx * sx;
    if (denom > 0.0) n_init = std::clamp((m * sxy - sx * sy) / denom, 0.0, 6.0);
  }
  double log_a_direct = 0.0;
  for (const auto& [x, y] : low_t) log_a_direct += y - n_init * x;
  log_a_direct /= static_cast<double>(low_t.size());
  const double a_direct_init = std::exp(log_a_direct);

  const auto model_for = [&](bool fixed_n) {
    return [fixed_n, settings](const Eigen::VectorXd& theta, const DataRow& row) {
      T1Model m;
      if (fixed_n) {
        m.a_direct = theta(0);
        m.n_exponent = settings.fixed_exponent;
        m.a_orbach = theta(1);
        m.delta_orbach_k = theta(2);
      } else {
        m.a_direct = theta(0);
        m.n_exponent = theta(1);
        m.a_orbach = theta(2);
        m.delta_orbach_k = theta(3);
      }
      m.orbach_form = settings.orbach_form;
      return t1_log_rate(m, row);
    };
  };

  // A small fixed grid of Orbach starts keeps the fit off local minima.
  const std::vector<double> delta_candidates = {2.0 * t_max, 4.0 * t_max,
                                                8.0 * t_max};
  FitResult best;
  bool have_best = false;
  for (const double delta0 : delta_candidates) {
    // Orbach amplitude seeded from the hottest point's excess rate.
    double rate_hot = 0.0, direct_hot = 0.0;
    for (const auto& row : data.rows)
      if (row.temp_k == t_max) {
        rate_hot = std::max(rate_hot, row.value);
        direct_hot = a_direct_init *
                     std::pow(2.0 * std::numbers::pi * row.nu_hz, n_init) *
                     row.temp_k;
      }
    const double excess = std::max(rate_hot - direct_hot, 1e-3 * rate_hot);
    const double a_orbach_init = excess * std::exp(delta0 / t_max);

    Eigen::VectorXd init;
    FitOptions fit_options;
    if (settings.fix_exponent) {
      init.resize(3);
      init << a_direct_init, a_orbach_init, delta0;
      fit_options.lower_bounds = Eigen::VectorXd::Zero(3);
      fit_options.upper_bounds.resize(3);
      fit_options.upper_bounds << 1e30, 1e30, 1e6;
    } else {
      init.resize(4);
      init << a_direct_init, n_init, a_orbach_init, delta0;
      fit_options.lower_bounds.resize(4);
      fit_options.lower_bounds << 0.0, 0.0, 0.0, 0.0;
      fit_options.upper_bounds.resize(4);
      fit_options.upper_bounds << 1e30, 6.0, 1e30, 1e6;
    }
    FitResult candidate = fit_damped_least_squares(
        model_for(settings.fix_exponent), log_data, init, fit_options);
    const bool better =
        !have_best || (candidate.converged && !best.converged) ||
        (candidate.converged == best.converged &&
         candidate.residual_norm < best.residual_norm);
    if (better) {
      best = std::move(candidate);
      have_best = true;
    }
  }

  T1FitResult out;
  out.fit = best;
  if (!flag.empty())
    out.fit.flag = out.fit.flag.empty() ? flag : out.fit.flag + "; " + flag;
  if (settings.fix_exponent) {
    out.model.a_direct = best.parameters(0);
    out.model.n_exponent = settings.fixed_exponent;
    out.model.a_orbach = best.parameters(1);
    out.model.delta_orbach_k = best.parameters(2);
  } else {
    out.model.a_direct = best.parameters(0);
    out.model.n_exponent = best.parameters(1);
    out.model.a_orbach = best.parameters(2);
    out.model.delta_orbach_k = best.parameters(3);
  }
  out.model.orbach_form = settings.orbach_form;
  return out;
}

ArrheniusFit fit_arrhenius(const DataSet& data) {
  if (data.rows.size() < 2)
    throw std::invalid_argument("Arrhenius fit needs at least two temperatures");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(data.rows.size());
  for (const auto& row : data.rows) {
    if (row.value <= 0.0 || row.temp_k <= 0.0)
      throw std::invalid_argument("decay times and temperatures must be > 0");
    const double x = 1.0 / row.temp_k;
    const double y = -std::log(row.value);  // ln(1/T1N)
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0)
    throw std::invalid_argument("Arrhenius fit needs distinct temperatures");
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;

  ArrheniusFit out;
  out.delta_e_k = -slope;
  out.prefactor_per_s = std::exp(intercept);
  double ss = 0.0;
  for (const auto& row : data.rows) {
    const double predicted = intercept + slope / row.temp_k;
    const double r = -std::log(row.value) - predicted;
    ss += r * r;
  }
  out.residual_norm = std::sqrt(ss);
  if (data.rows.size() > 2) {
    const double s2 = ss / (n - 2.0);
    out.delta_e_sigma_k = std::sqrt(s2 * n / denom);
  }
  return out;
}

ExponentialFit fit_exponential_decay(const std::vector<double>& t_s,
                                     const std::vector<double>& y) {
  if (t_s.size() != y.size() || t_s.size() < 5)
    throw std::invalid_argument("exponential fit needs >= 5 (t, y) points");
  if (!std::is_sorted(t_s.begin(), t_s.end()))
    throw std::invalid_argument("times must be increasing");

  ExponentialFit out;
  double y_min = y[0], y_max = y[0];
  for (const double v : y) {
    y_min = std::min(y_min, v);
    y_max = std::max(y_max, v);
  }
  const double range = y_max - y_min;
  if (range <= 1e-14 * std::max(std::abs(y_max), 1.0)) {
    out.flag = "non-decaying";
    return out;
  }

  const double offset0 = y.back();
  const double amplitude0 = y.front() - offset0;
  // Crossing of |y - C| below |A|/e gives the time-constant seed.
  double tau0 = (t_s.back() - t_s.front()) / 3.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(y[i] - offset0) <= std::abs(amplitude0) / std::numbers::e) {
      if (t_s[i] > t_s.front()) tau0 = t_s[i] - t_s.front();
      break;
    }
  }

  DataSet data;
  data.rows.reserve(t_s.size());
  for (std::size_t i = 0; i < t_s.size(); ++i) {
    DataRow row;
    row.t_s = t_s[i];
    row.value = y[i];
    data.rows.push_back(row);
  }
  const ParametricModel model = [](const Eigen::VectorXd& theta,
                                   const DataRow& row) {
    return theta(0) * std::exp(-row.t_s / theta(1)) + theta(2);
  };
  Eigen::VectorXd init(3);
  init << amplitude0, tau0, offset0;
  FitOptions options;
  const double span = t_s.back() - t_s.front();
  options.lower_bounds.resize(3);
  options.lower_bounds << -1e300, 1e-9 * span, -1e300;
  options.upper_bounds.resize(3);
  options.upper_bounds << 1e300, 1e6 * span, 1e300;
  const FitResult fit = fit_damped_least_squares(model, data, init, options);

  out.converged = fit.converged;
  if (!fit.converged) {
    out.flag = "no-convergence";
    return out;
  }
  out.amplitude = fit.parameters(0);
  out.tau_s = fit.parameters(1);
  out.offset = fit.parameters(2);
  if (std::abs(out.amplitude) < 1e-9 * range) {
    out.flag = "non-decaying";
    out.converged = false;
  }
  return out;
}

DataSet make_synthetic_t1_data(const T1Model& truth,
                               const std::vector<double>& frequencies_hz,
                               const std::vector<double>& temperatures_k,
                               double noise_fraction, std::uint64_t seed) {
  DataSet data;
  data.provenance = "synthetic";
  CounterRng rng(seed);
  for (const double nu : frequencies_hz)
    for (const double temp : temperatures_k) {
      DataRow row;
      row.nu_hz = nu;
      row.temp_k = temp;
      const double truth_rate = t1_rate(truth, nu, temp);
      row.value = truth_rate * std::exp(noise_fraction * rng.normal());
      row.sigma = noise_fraction > 0.0 ? noise_fraction * row.value : 0.0;
      data.rows.push_back(row);
    }
  return data;
}

}  // namespace hfepr
