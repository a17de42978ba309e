#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hfepr/constants.hpp"
#include "hfepr/density.hpp"
#include "hfepr/pulse.hpp"
#include "hfepr/rng.hpp"
#include "hfepr/spin.hpp"

using namespace hfepr;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double field_for(double g, double nu_hz) {
  return constants.planck_h * nu_hz / (g * constants.bohr_magneton);
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

// Closed-form normalized two-level nutation signal for <Sz> detection.
double rabi_closed_form(double w1, double detuning, double t) {
  const double wr2 = w1 * w1 + detuning * detuning;
  if (wr2 == 0.0) return 1.0;
  return (detuning * detuning + w1 * w1 * std::cos(std::sqrt(wr2) * t)) / wr2;
}

}  // namespace

TEST_CASE("rotating frame: on-resonance drive is omega_1 Sx") {
  const double g = 2.0;
  const SpinSystem system({electron(g)});
  const double b0 = field_for(g, 240e9);
  PulseEvent pulse;
  pulse.b1_tesla = 3e-5;  // 0.3 gauss
  const Matrix h = rotating_frame_hamiltonian(system, b0, pulse, 240e9);

  const double w1 = g * constants.bohr_magneton * 3e-5 / constants.hbar;
  CHECK((h - w1 * system.jx(0)).cwiseAbs().maxCoeff() < 1e-6 * w1);

  // 0.3 gauss at g = 2 drives at about 0.84 MHz.
  CHECK(w1 / kTwoPi == doctest::Approx(0.84e6).epsilon(0.01));
  CHECK(drive_frequency(system.species()[0], 3e-5) == doctest::Approx(w1));

  // pi/2 phase moves the drive onto Sy.
  pulse.phase_rad = std::numbers::pi / 2.0;
  const Matrix hy = rotating_frame_hamiltonian(system, b0, pulse, 240e9);
  CHECK((hy - w1 * system.jy(0)).cwiseAbs().maxCoeff() < 1e-6 * w1);

  // An RF pulse on an electron-only system addresses nobody.
  PulseEvent rf;
  rf.channel = PulseChannel::Rf;
  CHECK_THROWS_AS(rotating_frame_hamiltonian(system, b0, rf, 240e9),
                  std::invalid_argument);
}

TEST_CASE("rotating frame: secular hyperfine survives, flip-flop dropped") {
  const SpinSystem system({electron(2.0), nucleus("31P", constants.gamma_p31)},
                          {HyperfineCoupling{0, 1, 117.5e6}});
  const double b0 = field_for(2.0, 240e9);
  PulseEvent pulse;
  pulse.b1_tesla = 0.0;
  const Matrix h = rotating_frame_hamiltonian(system, b0, pulse, 240e9);
  // Product basis 0..3 = ++, +-, -+, --: no off-diagonal terms remain.
  CHECK(std::abs(h(1, 2)) == 0.0);
  CHECK(std::abs(h(0, 3)) == 0.0);
  // Sz.Iz part: the two electron lines differ by 2 pi a.
  const double split01 = (h(0, 0) - h(1, 1)).real();
  const double split23 = (h(2, 2) - h(3, 3)).real();
  CHECK(std::abs((split01 - split23) / kTwoPi) ==
        doctest::Approx(117.5e6).epsilon(1e-9));
}

TEST_CASE("rabi_nutation: delta distribution matches the two-level closed form") {
  const double g = 2.0;
  const SpinSystem system({electron(g)});
  const double b0 = field_for(g, 240e9);
  const double b1 = 3e-5;
  const double w1 = g * constants.bohr_magneton * b1 / constants.hbar;
  const std::vector<double> grid = linspace(0.0, 10.0 * kTwoPi / w1, 401);

  // On resonance: cos(w1 t), max abs error < 1e-9.
  const Series trace = rabi_nutation(system, b0, B1Distribution::delta(b1), grid,
                                     Detection{Observable::Sz, 0});
  CHECK(trace.front().second == doctest::Approx(1.0).epsilon(1e-12));
  double worst = 0.0;
  for (const auto& [t, y] : trace)
    worst = std::max(worst, std::abs(y - std::cos(w1 * t)));
  CHECK(worst < 1e-9);

  // Detuned by w1: generalized Rabi frequency sqrt(2) w1, amplitude
  // scaled by w1^2 / wr^2.
  NutationOptions options;
  options.carrier_offset_hz = -w1 / kTwoPi;  // detuning Delta = +w1
  const Series detuned = rabi_nutation(system, b0, B1Distribution::delta(b1),
                                       grid, Detection{Observable::Sz, 0}, options);
  worst = 0.0;
  for (const auto& [t, y] : detuned)
    worst = std::max(worst, std::abs(y - rabi_closed_form(w1, w1, t)));
  CHECK(worst < 1e-9);

  // Grid validation.
  CHECK_THROWS_AS(rabi_nutation(system, b0, B1Distribution::delta(b1), {},
                                Detection{Observable::Sz, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(rabi_nutation(system, b0, B1Distribution::delta(b1),
                                {2e-6, 1e-6}, Detection{Observable::Sz, 0}),
                  std::invalid_argument);
}

TEST_CASE("rabi_nutation: uniform ensemble against a brute-force oracle") {
  const double g = 2.0;
  const SpinSystem system({electron(g)});
  const double b0 = field_for(g, 240e9);
  const double b1_max = 3e-5;
  const double w1_max = g * constants.bohr_magneton * b1_max / constants.hbar;
  const double mean_period = kTwoPi / (0.75 * w1_max);
  const std::vector<double> grid = linspace(0.0, 10.0 * mean_period, 257);

  const Series trace =
      rabi_nutation(system, b0, B1Distribution::uniform(0.5 * b1_max, b1_max),
                    grid, Detection{Observable::Sz, 0});

  // Independent oracle: closed-form cosine averaged over 10^4 strata.
  for (std::size_t i = 0; i < grid.size(); i += 16) {
    double oracle = 0.0;
    const int n = 10000;
    for (int k = 0; k < n; ++k) {
      const double b = 0.5 * b1_max + (k + 0.5) / n * 0.5 * b1_max;
      oracle += std::cos(g * constants.bohr_magneton * b / constants.hbar *
                         grid[i]);
    }
    oracle /= n;
    CHECK(std::abs(trace[i].second - oracle) < 5e-3);
  }

  // Envelope at ten mean periods has collapsed below 0.3.
  for (const auto& [t, y] : trace)
    if (t >= 10.0 * mean_period - 1e-12) CHECK(std::abs(y) < 0.3);
}

TEST_CASE("rabi_nutation: narrow vs wide B1 spread (EDMR vs EPR contrast)") {
  const double g = 1.9985;
  const SpinSystem system({electron(g)});
  const double b0 = field_for(g, 240e9);
  const double b1 = 3e-5;
  const double w1 = g * constants.bohr_magneton * b1 / constants.hbar;
  const std::vector<double> grid = linspace(0.0, 12.0 * kTwoPi / w1, 1024);

  const Series narrow =
      rabi_nutation(system, b0, B1Distribution::gaussian(b1, 0.02 * b1), grid,
                    Detection{Observable::Sz, 0});
  const Series wide =
      rabi_nutation(system, b0, B1Distribution::gaussian(b1, 0.30 * b1), grid,
                    Detection{Observable::Sz, 0});

  CHECK(count_resolvable_extrema(narrow) >= 5);
  CHECK(count_resolvable_extrema(wide) < 5);
  // Wide distribution: dead within about one period.
  for (const auto& [t, y] : wide)
    if (t > 1.5 * kTwoPi / w1) CHECK(std::abs(y) < 0.3);

  // Monotonicity: spreading B1 never adds resolvable extrema.
  int previous = count_resolvable_extrema(narrow);
  for (const double sd : {0.05, 0.1, 0.2, 0.3}) {
    const Series trace = rabi_nutation(system, b0,
                                       B1Distribution::gaussian(b1, sd * b1),
                                       grid, Detection{Observable::Sz, 0});
    const int count = count_resolvable_extrema(trace);
    CHECK(count <= previous);
    previous = count;
  }
}

TEST_CASE("rabi_nutation: ensemble averaging is linear in the weights") {
  const double g = 2.0;
  const SpinSystem system({electron(g)});
  const double b0 = field_for(g, 240e9);
  const std::vector<double> grid = linspace(0.0, 1e-5, 64);

  CounterRng rng(31);
  std::vector<std::pair<double, double>> parts_a, parts_b;
  for (int i = 0; i < 4; ++i) {
    parts_a.emplace_back(2e-5 + 2e-5 * rng.uniform(), rng.uniform() + 0.1);
    parts_b.emplace_back(2e-5 + 2e-5 * rng.uniform(), rng.uniform() + 0.1);
  }
  const double wa = 0.3, wb = 0.7;

  // Mixture distribution: weights scaled and concatenated.
  std::vector<std::pair<double, double>> mixture;
  double sum_a = 0.0, sum_b = 0.0;
  for (const auto& [b, w] : parts_a) sum_a += w;
  for (const auto& [b, w] : parts_b) sum_b += w;
  for (const auto& [b, w] : parts_a) mixture.emplace_back(b, wa * w / sum_a);
  for (const auto& [b, w] : parts_b) mixture.emplace_back(b, wb * w / sum_b);

  const Detection det{Observable::Sz, 0};
  const Series mixed =
      rabi_nutation(system, b0, B1Distribution::empirical(mixture), grid, det);
  const Series from_a =
      rabi_nutation(system, b0, B1Distribution::empirical(parts_a), grid, det);
  const Series from_b =
      rabi_nutation(system, b0, B1Distribution::empirical(parts_b), grid, det);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(mixed[i].second ==
          doctest::Approx(wa * from_a[i].second + wb * from_b[i].second)
              .epsilon(1e-10));
}

TEST_CASE("hahn_echo_rabi: delta distribution nutates as sin(w1 tp)") {
  const double g = 2.0;
  const SpinSystem system({electron(g)});
  const double b0 = field_for(g, 240e9);
  const double b1 = 3e-5;
  const double w1 = g * constants.bohr_magneton * b1 / constants.hbar;
  const std::vector<double> grid = linspace(0.0, 2.0 * kTwoPi / w1, 161);

  const Series echo = hahn_echo_rabi(system, b0, B1Distribution::delta(b1), grid,
                                     1e-6, 1e30);
  // Proportionality constant fixed at the quarter-period maximum
  // (grid[20]: w1 tp = pi/2).
  const double k = echo[20].second / std::sin(w1 * grid[20]);
  CHECK(std::abs(k) > 1e-3);  // nonzero echo amplitude
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(echo[i].second - k * std::sin(w1 * grid[i])) <
          1e-9 * std::abs(k));

  CHECK_THROWS_AS(hahn_echo_rabi(system, b0, B1Distribution::delta(b1), grid,
                                 0.0, 1e30),
                  std::invalid_argument);
}

TEST_CASE("hahn_echo_rabi: echo amplitude carries exp(-2 tau / T2)") {
  const double g = 2.0;
  const SpinSystem system({electron(g)});
  const double b0 = field_for(g, 240e9);
  const double b1 = 3e-5;
  const double w1 = g * constants.bohr_magneton * b1 / constants.hbar;
  const std::vector<double> grid = {0.25 * kTwoPi / w1};

  const double t2 = 200e-6;
  const double tau = t2 / 2.0;
  const Series with_decay =
      hahn_echo_rabi(system, b0, B1Distribution::delta(b1), grid, tau, t2);
  const Series no_decay =
      hahn_echo_rabi(system, b0, B1Distribution::delta(b1), grid, tau, 1e30);
  CHECK(std::abs(with_decay[0].second / no_decay[0].second -
                 std::exp(-1.0)) < 1e-12);
}

TEST_CASE("hahn_echo_rabi: wide B1 distribution damps the nutation") {
  // The EPR-detected trace of a thick sample: oscillations collapse
  // within about one period.
  const double g = 1.9985;
  const SpinSystem system({electron(g)});
  const double b0 = field_for(g, 240e9);
  const double b1 = 3e-5;
  const double w1 = g * constants.bohr_magneton * b1 / constants.hbar;
  const std::vector<double> grid = linspace(0.0, 8.0 * kTwoPi / w1, 513);

  const Series sharp = hahn_echo_rabi(system, b0, B1Distribution::delta(b1),
                                      grid, 1e-6, 1e30);
  const Series damped =
      hahn_echo_rabi(system, b0, B1Distribution::uniform(0.3 * b1, 1.7 * b1, 512),
                     grid, 1e-6, 1e30);

  double sharp_peak = 0.0, damped_late = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sharp_peak = std::max(sharp_peak, std::abs(sharp[i].second));
    if (grid[i] > 2.0 * kTwoPi / w1)
      damped_late = std::max(damped_late, std::abs(damped[i].second));
  }
  CHECK(damped_late < 0.2 * sharp_peak);
}

TEST_CASE("excitation bandwidth, profile and selectivity") {
  CHECK(excitation_bandwidth(1e-6) == doctest::Approx(1e6).epsilon(1e-12));
  CHECK(excitation_bandwidth(100e-9) == doctest::Approx(10e6).epsilon(1e-12));
  CHECK_THROWS_AS(excitation_bandwidth(0.0), std::invalid_argument);
  CHECK_THROWS_AS(excitation_bandwidth(-1e-6), std::invalid_argument);

  CHECK(excitation_profile(1e-6, 0.0) == doctest::Approx(1.0));
  // sinc^2 at half the bandwidth: (sin(pi/2)/(pi/2))^2.
  CHECK(excitation_profile(1e-6, 0.5e6) ==
        doctest::Approx(std::pow(2.0 / std::numbers::pi, 2)).epsilon(1e-12));

  // Lines 5 bandwidths apart are selectively addressable, 0.2 apart not.
  const double tp = 1e-6;
  const double width = excitation_bandwidth(tp);
  CHECK(selectivity(tp, 5.0 * width).addressable);
  CHECK_FALSE(selectivity(tp, 0.2 * width).addressable);
  CHECK(selectivity(tp, 0.2 * width).unwanted_weight >
        100.0 * selectivity(tp, 5.0 * width).unwanted_weight);
}

TEST_CASE("figure of merit Q_M = T2 / T_op") {
  CHECK(figure_of_merit(100e-6, 100e-9) == doctest::Approx(1000.0));
  CHECK(figure_of_merit(6e-6, 6e-6) == doctest::Approx(1.0));

  // T2 = 200 us against a pi pulse at 0.3 gauss (g = 2).
  const double w1 = 2.0 * constants.bohr_magneton * 3e-5 / constants.hbar;
  const double t_op = std::numbers::pi / w1;
  CHECK(figure_of_merit(200e-6, t_op) == doctest::Approx(336.0).epsilon(0.01));

  CHECK_THROWS_AS(figure_of_merit(0.0, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(figure_of_merit(1e-6, 0.0), std::invalid_argument);
}

TEST_CASE("B1 distributions: deterministic quantile sampling") {
  // Weights normalized, amplitudes nonnegative, mean as requested.
  const B1Distribution gauss = B1Distribution::gaussian(3e-5, 0.3 * 3e-5, 256);
  double total = 0.0, mean = 0.0;
  for (const auto& [b, w] : gauss.samples()) {
    CHECK(b >= 0.0);
    total += w;
    mean += b * w;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mean == doctest::Approx(3e-5).epsilon(1e-3));

  // Identical construction gives identical samples (no RNG anywhere).
  const B1Distribution again = B1Distribution::gaussian(3e-5, 0.3 * 3e-5, 256);
  for (std::size_t i = 0; i < gauss.samples().size(); ++i)
    CHECK(gauss.samples()[i] == again.samples()[i]);

  CHECK_THROWS_AS(B1Distribution::delta(-1e-5), std::invalid_argument);
  CHECK_THROWS_AS(B1Distribution::uniform(2e-5, 1e-5), std::invalid_argument);
  CHECK_THROWS_AS(B1Distribution::gaussian(3e-5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(B1Distribution::empirical({{1e-5, -1.0}}), std::invalid_argument);

  // Quantile function sanity.
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), std::invalid_argument);
}

TEST_CASE("Mims ENDOR skeleton: resonant RF changes the stimulated echo") {
  const double g = 1.9985;
  const double a = 117.5e6;
  const SpinSystem system({electron(g), nucleus("31P", constants.gamma_p31)},
                          {HyperfineCoupling{0, 1, a}});
  const double b0 = field_for(g, 240e9);
  // Frame sits on the m_I = +1/2 EPR line; the pulse bandwidth
  // (~8 MHz) keeps the other hyperfine line untouched.
  const double nu_e = g * constants.bohr_magneton * b0 / constants.planck_h;
  const double frame = nu_e + a / 2.0;

  const double b1 = 3e-4;
  const double w1 = g * constants.bohr_magneton * b1 / constants.hbar;
  const double tp90 = 0.5 * std::numbers::pi / w1;
  const double tau = 2e-7;

  // RF pi pulse tuned to one ENDOR line (offset a/2 from the Larmor
  // reference).
  const double rf_b1 = 5e-3;
  const double w1_rf = kTwoPi * constants.gamma_p31 * rf_b1;
  const double t_rf = std::numbers::pi / w1_rf;
  const double mix = 2.0 * t_rf;

  const Detection det{Observable::EchoIntegral, 0};
  const DensityState rho0 = thermal_state(lab_hamiltonian(system, b0), 3.0);

  const auto echo_with_offset = [&](double rf_offset_hz) {
    const PulseSequence seq = mims_endor_sequence(
        tp90, tau, b1, mix, t_rf, rf_b1, rf_offset_hz, frame, det);
    const DensityState final_state = run_pulse_sequence(system, b0, seq, rho0);
    return expectation(final_state, observable_matrix(system, det));
  };

  // RF on either nuclear transition (offsets +-a/2 from the Larmor
  // reference) wipes out the stimulated echo; a far-detuned RF pulse
  // leaves it intact.
  const double far_off = echo_with_offset(50e6 + a);
  CHECK(std::abs(far_off) > 0.05);
  CHECK(std::abs(echo_with_offset(a / 2.0)) < 0.2 * std::abs(far_off));
  CHECK(std::abs(echo_with_offset(-a / 2.0)) < 0.2 * std::abs(far_off));
}
