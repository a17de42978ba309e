#include "hfepr/dnp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <array>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "hfepr/constants.hpp"
#include "hfepr/density.hpp"
#include "hfepr/fit.hpp"

namespace hfepr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void validate(const FourLevelSystem& sys) {
  if (sys.nu_e_hz <= 0.0) throw std::invalid_argument("nu_e must be > 0");
  if (sys.a_hz < 0.0) throw std::invalid_argument("hyperfine a must be >= 0");
  if (sys.w_e <= 0.0) throw std::invalid_argument("w_e must be > 0");
  if (sys.w_n < 0.0) throw std::invalid_argument("w_n must be >= 0");
  if (sys.temp_k <= 0.0) throw std::invalid_argument("temperature must be > 0");
}

// Adds a detailed-balanced rate pair between product states i and j:
// downward rate `rate`, upward rate scaled by the Boltzmann factor of
// the exact energy gap. Which state is upper is computed, not assumed.
void add_balanced_pair(Eigen::Matrix4d& r, const Eigen::Vector4d& energies,
                       double temp_k, int i, int j, double rate) {
  if (rate <= 0.0) return;
  int lower = i, upper = j;
  if (energies(lower) > energies(upper)) std::swap(lower, upper);
  const double gap =
      constants.hbar * (energies(upper) - energies(lower));  // J
  const double boltzmann = std::exp(-gap / (constants.boltzmann_k * temp_k));
  r(lower, upper) += rate;              // downward
  r(upper, upper) -= rate;
  r(upper, lower) += rate * boltzmann;  // upward
  r(lower, lower) -= rate * boltzmann;
}

void add_saturation(Eigen::Matrix4d& r, int i, int j, double rate) {
  if (rate <= 0.0) return;
  r(i, j) += rate;
  r(j, j) -= rate;
  r(j, i) += rate;
  r(i, i) -= rate;
}

std::pair<int, int> drive_pair(DriveTarget target) {
  switch (target) {
    case DriveTarget::EprMiPlus:
      return {0, 2};  // |++> <-> |-+>
    case DriveTarget::EprMiMinus:
      return {1, 3};  // |+-> <-> |-->
    case DriveTarget::NuclearMsPlus:
      return {0, 1};  // |++> <-> |+->
    case DriveTarget::NuclearMsMinus:
      return {2, 3};  // |-+> <-> |-->
  }
  throw std::invalid_argument("drive names no transition of the four-level system");
}

// Diagonalized generator for cheap evaluation at many times. Rate
// matrices here are diagonalizable with well-conditioned eigenvectors;
// trajectories are cross-checked against RK4 in the test suite.
struct GeneratorFlow {
  Eigen::MatrixXcd vectors;
  Eigen::VectorXcd lambdas;
  Eigen::VectorXcd coefficients;  // V^-1 p0
  int zero_mode = 0;              // eigenvalue closest to zero (steady state)

  GeneratorFlow(const Eigen::Matrix4d& generator, const Eigen::Vector4d& p0) {
    Eigen::EigenSolver<Eigen::Matrix4d> solver(generator);
    vectors = solver.eigenvectors();
    lambdas = solver.eigenvalues();
    coefficients = vectors.partialPivLu().solve(p0.cast<std::complex<double>>());
    for (int i = 1; i < lambdas.size(); ++i)
      if (std::abs(lambdas(i)) < std::abs(lambdas(zero_mode))) zero_mode = i;
  }

  Eigen::Vector4d at(double t) const {
    Eigen::VectorXcd scaled = coefficients;
    for (int i = 0; i < scaled.size(); ++i)
      scaled(i) *= i == zero_mode ? 1.0 : std::exp(lambdas(i) * t);
    return (vectors * scaled).real();
  }

  // Slowest and fastest relaxing modes, the zero mode excluded.
  double slowest_rate() const {
    double slowest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < lambdas.size(); ++i)
      if (i != zero_mode)
        slowest = std::min(slowest, std::abs(lambdas(i).real()));
    return slowest;
  }
  double fastest_rate() const {
    double fastest = 0.0;
    for (int i = 0; i < lambdas.size(); ++i)
      if (i != zero_mode)
        fastest = std::max(fastest, std::abs(lambdas(i).real()));
    return fastest;
  }
};

}  // namespace

double FourLevelSystem::eta() const {
  if (eta_override) return *eta_override;
  return a_hz / (2.0 * nu_e_hz);
}

SpinSystem four_level_spin_system(const FourLevelSystem& sys) {
  validate(sys);
  // Synthesize (g, gamma) at B0 = 1 T so the spin-core Hamiltonian
  // reproduces exactly the requested frequencies.
  const double g = constants.planck_h * sys.nu_e_hz / constants.bohr_magneton;
  return SpinSystem({electron(g), nucleus("n", sys.nu_n_hz)},
                    {HyperfineCoupling{0, 1, sys.a_hz}});
}

Matrix four_level_hamiltonian(const FourLevelSystem& sys) {
  return lab_hamiltonian(four_level_spin_system(sys), 1.0);
}

Eigen::Vector4d four_level_energies(const FourLevelSystem& sys) {
  const Matrix h = four_level_hamiltonian(sys);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  // Assign each eigenvalue to the product label its eigenvector
  // overlaps most (mixing is tiny in the high-field regime).
  Eigen::Vector4d energies = Eigen::Vector4d::Zero();
  std::array<bool, 4> taken{};
  for (int k = 0; k < 4; ++k) {
    int best = -1;
    double best_weight = -1.0;
    for (int label = 0; label < 4; ++label) {
      const double weight = std::norm(solver.eigenvectors()(label, k));
      if (!taken[label] && weight > best_weight) {
        best_weight = weight;
        best = label;
      }
    }
    taken[best] = true;
    energies(best) = solver.eigenvalues()(k);
  }
  return energies;
}

Eigen::Matrix4d build_dnp_rate_matrix(const FourLevelSystem& sys,
                                      const std::vector<DriveSpec>& drives) {
  validate(sys);
  const Eigen::Vector4d energies = four_level_energies(sys);
  Eigen::Matrix4d r = Eigen::Matrix4d::Zero();

  // Allowed EPR transitions, one per nuclear spectator state.
  add_balanced_pair(r, energies, sys.temp_k, 0, 2, sys.w_e);
  add_balanced_pair(r, energies, sys.temp_k, 1, 3, sys.w_e);
  // Forbidden electron-nuclear flip-flop |+-> <-> |-+>, first-order
  // mixing rate. The flip-flip pair |++> <-> |--> stays untouched.
  const double eta = sys.eta();
  add_balanced_pair(r, energies, sys.temp_k, 1, 2, eta * eta * sys.w_e);
  // Intrinsic nuclear flips, one per electron spectator state.
  add_balanced_pair(r, energies, sys.temp_k, 0, 1, sys.w_n);
  add_balanced_pair(r, energies, sys.temp_k, 2, 3, sys.w_n);

  for (const auto& drive : drives) {
    if (drive.saturation_rate < 0.0)
      throw std::invalid_argument("saturation rate must be >= 0");
    const auto [i, j] = drive_pair(drive.target);
    add_saturation(r, i, j, drive.saturation_rate);
  }
  return r;
}

Eigen::Vector4d dnp_steady_state(const Eigen::Matrix4d& generator) {
  // Markov-chain tree theorem: p_r is proportional to the sum over
  // spanning trees, oriented toward r, of the rate products. Rates span
  // many decades here and a plain null-space solve loses digits to the
  // conditioning; the tree sum involves only products of nonnegative
  // rates, so it stays accurate to machine precision.
  struct Edge {
    int a, b;
  };
  static constexpr Edge kEdges[6] = {{0, 1}, {0, 2}, {0, 3},
                                     {1, 2}, {1, 3}, {2, 3}};
  Eigen::Vector4d weights = Eigen::Vector4d::Zero();
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      for (int k = j + 1; k < 6; ++k) {
        const Edge tree[3] = {kEdges[i], kEdges[j], kEdges[k]};
        // Spanning tree iff the three edges touch all four vertices
        // without a cycle (a 3-edge cycle uses only 3 vertices).
        bool seen[4] = {};
        for (const Edge& e : tree) seen[e.a] = seen[e.b] = true;
        if (!(seen[0] && seen[1] && seen[2] && seen[3])) continue;
        for (int root = 0; root < 4; ++root) {
          // Orient each edge toward the root by walking from the leaves.
          double product = 1.0;
          int parent[4] = {-1, -1, -1, -1};
          bool attached[4] = {};
          attached[root] = true;
          for (int pass = 0; pass < 3; ++pass)
            for (const Edge& e : tree) {
              if (attached[e.a] && !attached[e.b]) {
                parent[e.b] = e.a;
                attached[e.b] = true;
              } else if (attached[e.b] && !attached[e.a]) {
                parent[e.a] = e.b;
                attached[e.a] = true;
              }
            }
          for (int v = 0; v < 4; ++v)
            if (v != root) product *= generator(parent[v], v);
          weights(root) += product;
        }
      }
  const double total = weights.sum();
  if (total <= 0.0)
    throw std::runtime_error("generator has no reachable steady state");
  return weights / total;
}

namespace {

int nuclear_lower_sign(const FourLevelSystem& sys) {
  // nu_n = gamma * B0: positive gamma puts m_I = +1/2 lowest.
  return sys.nu_n_hz >= 0.0 ? +1 : -1;
}

}  // namespace

double nuclear_polarization(const Eigen::Vector4d& p, const FourLevelSystem& sys) {
  const double plus = p(0) + p(2);   // m_I = +1/2
  const double minus = p(1) + p(3);  // m_I = -1/2
  return nuclear_lower_sign(sys) * (plus - minus) / (plus + minus);
}

double electron_polarization(const Eigen::Vector4d& p, const FourLevelSystem& sys) {
  (void)sys;  // electron m_S = -1/2 is the lower level for g > 0
  const double plus = p(0) + p(1);
  const double minus = p(2) + p(3);
  return (minus - plus) / (plus + minus);
}

Eigen::Vector4d thermal_populations(const FourLevelSystem& sys) {
  const Eigen::Vector4d energies = four_level_energies(sys);
  const double beta = constants.hbar / (constants.boltzmann_k * sys.temp_k);
  Eigen::Vector4d p;
  const double e0 = energies.minCoeff();
  for (int i = 0; i < 4; ++i) p(i) = std::exp(-beta * (energies(i) - e0));
  return p / p.sum();
}

namespace {

DnpTrajectory integrate(const FourLevelSystem& sys,
                        const Eigen::Matrix4d& generator,
                        const Eigen::Vector4d& p0, double duration_s,
                        int n_points) {
  if (duration_s <= 0.0 || n_points < 2)
    throw std::invalid_argument("bad trajectory request");
  DnpTrajectory out;
  const GeneratorFlow flow(generator, p0);
  out.nuclear_polarization.reserve(n_points);
  Eigen::Vector4d p = p0;
  for (int i = 0; i < n_points; ++i) {
    const double t = duration_s * i / (n_points - 1);
    p = flow.at(t);
    out.nuclear_polarization.emplace_back(t, nuclear_polarization(p, sys));
  }
  out.final_populations = p;
  return out;
}

}  // namespace

DnpTrajectory simulate_overhauser_pump(const FourLevelSystem& sys,
                                       const DriveSpec& pump,
                                       double pump_duration_s, int n_points) {
  if (pump.target != DriveTarget::EprMiPlus &&
      pump.target != DriveTarget::EprMiMinus)
    throw std::invalid_argument("Overhauser pump must drive an EPR transition");
  const Eigen::Matrix4d generator = build_dnp_rate_matrix(sys, {pump});
  DnpTrajectory out = integrate(sys, generator, thermal_populations(sys),
                                pump_duration_s, n_points);
  if (pump.saturation_rate < 10.0 * sys.w_e)
    out.warnings.push_back(
        "pump saturation rate is not large compared to the electron rate; "
        "the driven pair will not fully equalize");
  return out;
}

DnpTrajectory simulate_endor_assisted(const FourLevelSystem& sys,
                                      const DriveSpec& microwave,
                                      const DriveSpec& rf, double duration_s,
                                      EndorOptions options) {
  if (microwave.target != DriveTarget::EprMiPlus &&
      microwave.target != DriveTarget::EprMiMinus)
    throw std::invalid_argument("microwave drive must target an EPR transition");
  if (rf.target != DriveTarget::NuclearMsPlus &&
      rf.target != DriveTarget::NuclearMsMinus)
    throw std::invalid_argument("rf drive must target a nuclear transition");

  if (options.schedule == EndorSchedule::Cw) {
    const Eigen::Matrix4d generator =
        build_dnp_rate_matrix(sys, {microwave, rf});
    return integrate(sys, generator, thermal_populations(sys), duration_s,
                     options.n_points);
  }

  // Sequential mode: alternate microwave-only and rf-only segments.
  double segment = options.segment_s;
  if (segment <= 0.0) segment = duration_s / 200.0;
  const Eigen::Matrix4d gen_mw = build_dnp_rate_matrix(sys, {microwave});
  const Eigen::Matrix4d gen_rf = build_dnp_rate_matrix(sys, {rf});
  const Eigen::Matrix4d u_mw = (gen_mw * segment).exp();
  const Eigen::Matrix4d u_rf = (gen_rf * segment).exp();

  DnpTrajectory out;
  Eigen::Vector4d p = thermal_populations(sys);
  double t = 0.0;
  out.nuclear_polarization.emplace_back(t, nuclear_polarization(p, sys));
  bool microwave_turn = true;
  while (t < duration_s) {
    p = (microwave_turn ? u_mw : u_rf) * p;
    microwave_turn = !microwave_turn;
    t += segment;
    out.nuclear_polarization.emplace_back(t, nuclear_polarization(p, sys));
  }
  out.final_populations = p;
  return out;
}

double time_to_steady_fraction(const FourLevelSystem& sys,
                               const Eigen::Matrix4d& generator,
                               const Eigen::Vector4d& initial, double fraction) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw std::invalid_argument("fraction must be in (0, 1)");
  const Eigen::Vector4d steady = dnp_steady_state(generator);
  const double target_pn = nuclear_polarization(steady, sys);
  const double start_pn = nuclear_polarization(initial, sys);
  const double gap0 = std::abs(start_pn - target_pn);
  if (gap0 < 1e-15) return 0.0;

  const GeneratorFlow flow(generator, initial);
  const double slowest = flow.slowest_rate();
  const double fastest = flow.fastest_rate();
  if (!std::isfinite(slowest) || fastest <= 0.0) return 0.0;

  const auto gap = [&](double t) {
    return std::abs(nuclear_polarization(flow.at(t), sys) - target_pn);
  };
  const double threshold = (1.0 - fraction) * gap0;

  // Geometric scan for the first crossing, then bisection.
  const double t_lo_start = 1e-3 / fastest;
  const double t_hi_limit = 200.0 / slowest;
  double t_prev = 0.0;
  double t_cross = -1.0;
  for (double t = t_lo_start; t <= t_hi_limit; t *= 1.05) {
    if (gap(t) <= threshold) {
      t_cross = t;
      break;
    }
    t_prev = t;
  }
  if (t_cross < 0.0)
    throw std::runtime_error("steady state not approached within the scan window");
  double lo = t_prev, hi = t_cross;
  for (int i = 0; i < 200 && (hi - lo) > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) <= threshold ? hi : lo) = mid;
  }
  return hi;
}

T1nResult extract_t1n(const FourLevelSystem& sys,
                      const std::vector<double>& temperatures_k,
                      const std::vector<double>& w_e_per_temp) {
  if (temperatures_k.size() < 3)
    throw std::invalid_argument("T1N extraction needs >= 3 temperatures");
  const auto [t_lo, t_hi] =
      std::minmax_element(temperatures_k.begin(), temperatures_k.end());
  if (*t_hi / *t_lo < 1.5)
    throw std::invalid_argument("temperatures must span a factor >= 1.5");
  if (!w_e_per_temp.empty() && w_e_per_temp.size() != temperatures_k.size())
    throw std::invalid_argument("w_e_per_temp size mismatch");

  T1nResult result;
  for (std::size_t k = 0; k < temperatures_k.size(); ++k) {
    FourLevelSystem at_t = sys;
    at_t.temp_k = temperatures_k[k];
    if (!w_e_per_temp.empty()) at_t.w_e = w_e_per_temp[k];

    // Polarized start: steady state of a strong pump on the m_I = -1/2
    // EPR line.
    const Eigen::Matrix4d pumped = build_dnp_rate_matrix(
        at_t, {DriveSpec{DriveTarget::EprMiMinus, 1e4 * at_t.w_e}});
    const Eigen::Vector4d p0 = dnp_steady_state(pumped);

    const Eigen::Matrix4d generator = build_dnp_rate_matrix(at_t, {});
    const Eigen::Vector4d p_eq = dnp_steady_state(generator);
    const double pn_eq = nuclear_polarization(p_eq, at_t);

    // The slowest generator mode sets the sampling window.
    GeneratorFlow flow(generator, p0);
    const double window = 3.0 / flow.slowest_rate();

    // Log-linear least squares on ln|P_n - P_eq|, capped at three
    // decades of decay.
    const double gap0 =
        std::abs(nuclear_polarization(p0, at_t) - pn_eq);
    std::vector<double> ts, lny;
    for (int i = 0; i < 64; ++i) {
      const double t = window * (i + 1) / 64.0;
      const double gap =
          std::abs(nuclear_polarization(flow.at(t), at_t) - pn_eq);
      if (gap < 1e-3 * gap0 || gap <= 0.0) break;
      ts.push_back(t);
      lny.push_back(std::log(gap));
    }
    if (ts.size() < 4) {
      result.quality_flag = "non-exponential";
      continue;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      sx += ts[i];
      sy += lny[i];
      sxx += ts[i] * ts[i];
      sxy += ts[i] * lny[i];
    }
    const double m = static_cast<double>(ts.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    if (slope >= 0.0) {
      result.quality_flag = "non-exponential";
      continue;
    }
    // Fit residual grades the single-exponential assumption.
    const double intercept = (sy - slope * sx) / m;
    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double r = lny[i] - (intercept + slope * ts[i]);
      ss += r * r;
    }
    if (std::sqrt(ss / m) > 0.05 && result.quality_flag.empty())
      result.quality_flag = "non-exponential";
    result.t1n_per_temp.emplace_back(temperatures_k[k], -1.0 / slope);
  }

  if (result.t1n_per_temp.size() >= 2) {
    DataSet arrhenius;
    for (const auto& [temp, t1n] : result.t1n_per_temp) {
      DataRow row;
      row.temp_k = temp;
      row.value = t1n;
      arrhenius.rows.push_back(row);
    }
    const ArrheniusFit fit = fit_arrhenius(arrhenius);
    result.delta_e_k = fit.delta_e_k;
    result.prefactor_per_s = fit.prefactor_per_s;
  }
  return result;
}

FourLevelSystem si_p_system(double nu_e_hz, double temp_k, double w_e,
                            double w_n) {
  // Literature inputs for the 31P donor in silicon.
  constexpr double kSiPHyperfineHz = 117.5e6;
  constexpr double kSiPg = 1.9985;
  const double b0 = constants.planck_h * nu_e_hz /
                    (kSiPg * constants.bohr_magneton);
  FourLevelSystem sys;
  sys.nu_e_hz = nu_e_hz;
  sys.nu_n_hz = constants.gamma_p31 * b0;
  sys.a_hz = kSiPHyperfineHz;
  sys.temp_k = temp_k;
  sys.w_e = w_e;
  sys.w_n = w_n;
  return sys;
}

}  // namespace hfepr
