#include <doctest.h>

#include <cmath>

#include <stdexcept>
#include "hfepr/constants.hpp"
#include "hfepr/spectra.hpp"

using namespace hfepr;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    area += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return area;
}

}  // namespace

TEST_CASE("resonance_field: first-order positions") {
  // g = 2.0023 at 9.7 GHz sits near 0.3461 T.
  CHECK(resonance_field(2.0023, 9.7e9) == doctest::Approx(0.3461).epsilon(1e-3));

  // Linear in nu: the same center at 336 GHz scales by exactly 336/9.7.
  const double ratio = resonance_field(2.0023, 336e9) / resonance_field(2.0023, 9.7e9);
  CHECK(std::abs(ratio / (336.0 / 9.7) - 1.0) < 1e-12);

  // I = 1 triplet: three lines spaced by a h / (g mu_B).
  const double a = 70e6;
  const double spacing = a * constants.planck_h / (2.0023 * constants.bohr_magneton);
  const double b_m1 = resonance_field(2.0023, 336e9, -1.0, a);
  const double b_0 = resonance_field(2.0023, 336e9, 0.0, a);
  const double b_p1 = resonance_field(2.0023, 336e9, +1.0, a);
  CHECK(b_m1 - b_0 == doctest::Approx(spacing).epsilon(1e-12));
  CHECK(b_0 - b_p1 == doctest::Approx(spacing).epsilon(1e-12));

  CHECK_THROWS_AS(resonance_field(0.0, 9.7e9), std::invalid_argument);
}

TEST_CASE("center_lines: first-order multiplets") {
  CenterDescriptor nitrogen;
  nitrogen.label = "N";
  nitrogen.g = 2.0023;
  nitrogen.hyperfine_lines = {{70e6, 1.0}};  // 14N-like triplet
  nitrogen.relative_weight = 3.0;

  const auto lines = center_lines(nitrogen, 336e9);
  REQUIRE(lines.size() == 3);
  double weight = 0.0;
  for (const auto& [field, w] : lines) weight += w;
  CHECK(weight == doctest::Approx(3.0).epsilon(1e-12));

  // Hyperfine spacing in field units does not depend on nu.
  const auto lines_lo = center_lines(nitrogen, 9.7e9);
  const double spacing_hi = lines[1].first - lines[0].first;
  const double spacing_lo = lines_lo[1].first - lines_lo[0].first;
  CHECK(std::abs(spacing_hi / spacing_lo - 1.0) < 1e-9);

  // Two coupled nuclei multiply out.
  CenterDescriptor pair = nitrogen;
  pair.hyperfine_lines = {{70e6, 1.0}, {20e6, 0.5}};
  CHECK(center_lines(pair, 336e9).size() == 6);
}

TEST_CASE("synthesize: unit-integral lineshapes, sum of weights") {
  CenterDescriptor center;
  center.label = "c";
  center.g = 2.0023;
  center.relative_weight = 2.5;
  center.fwhm_tesla = 2e-4;

  const double b_center = resonance_field(center.g, 336e9);
  const auto grid = linspace(b_center - 6e-3, b_center + 6e-3, 4001);
  const Spectrum spectrum = synthesize_epr_spectrum({center}, 336e9, grid);
  CHECK(spectrum.warnings.empty());
  CHECK(trapezoid(spectrum.axis, spectrum.intensity) ==
        doctest::Approx(2.5).epsilon(1e-6));

  // Pseudo-Voigt with a Lorentzian fraction still integrates to the
  // weight (the grid spans many widths; Lorentzian tails cost a bit).
  CenterDescriptor voigt = center;
  voigt.lorentzian_fraction = 0.3;
  const auto wide = linspace(b_center - 0.1, b_center + 0.1, 40001);
  const Spectrum vspec = synthesize_epr_spectrum({voigt}, 336e9, wide);
  CHECK(trapezoid(vspec.axis, vspec.intensity) ==
        doctest::Approx(2.5).epsilon(2e-3));

  // Derivative mode integrates to ~0 and matches the numerical
  // derivative of the absorption mode.
  const Spectrum deriv = synthesize_epr_spectrum({center}, 336e9, grid,
                                                 SpectrumOptions{true});
  CHECK(std::abs(trapezoid(deriv.axis, deriv.intensity)) < 1e-6);
  const double h = grid[1] - grid[0];
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double numeric =
        (spectrum.intensity[i + 1] - spectrum.intensity[i - 1]) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - deriv.intensity[i]));
    scale = std::max(scale, std::abs(deriv.intensity[i]));
  }
  CHECK(worst < 1e-3 * scale);

  // Grid not covering the line: warning metadata, no throw.
  const auto offset_grid = linspace(b_center + 0.01, b_center + 0.02, 101);
  const Spectrum clipped = synthesize_epr_spectrum({center}, 336e9, offset_grid);
  CHECK(!clipped.warnings.empty());

  CHECK_THROWS_AS(synthesize_epr_spectrum({}, 336e9, grid), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_epr_spectrum({center}, 336e9, {0.2, 0.1}),
                  std::invalid_argument);
}

TEST_CASE("synthesize: exchange pair sits midway between its parents") {
  // Pair center at g = (g1 + g2) / 2: first-order midpoint property.
  CenterDescriptor a, b, pair;
  a.label = "Nh";
  a.g = 2.0040;
  b.label = "Nc";
  b.g = 2.0006;
  pair.label = "pair";
  pair.g = 0.5 * (a.g + b.g);

  for (const double nu : {9.7e9, 336e9}) {
    const double midpoint =
        0.5 * (center_centroid(a, nu) + center_centroid(b, nu));
    const double pair_field = center_centroid(pair, nu);
    CHECK(std::abs(pair_field / midpoint - 1.0) < 1e-5);  // first order
  }
}

TEST_CASE("resolvability: g-value resolution grows linearly with frequency") {
  CenterDescriptor a, b;
  a.label = "Nh";
  a.g = 2.0040;
  a.fwhm_tesla = 3e-4;
  b.label = "Nc";
  b.g = 2.0006;
  b.fwhm_tesla = 3e-4;

  // Strong overlap at X-band, clean separation at 336 GHz.
  const Resolvability x_band = resolvability(a, b, 9.7e9);
  const Resolvability high = resolvability(a, b, 336e9);
  CHECK_FALSE(x_band.resolved);
  CHECK(high.resolved);
  CHECK(high.separation_over_width ==
        doctest::Approx(x_band.separation_over_width * 336.0 / 9.7)
            .epsilon(1e-9));

  // Centroid separation itself scales exactly with nu.
  const double sep_lo = std::abs(center_centroid(a, 9.7e9) - center_centroid(b, 9.7e9));
  const double sep_hi = std::abs(center_centroid(a, 336e9) - center_centroid(b, 336e9));
  CHECK(std::abs(sep_hi / sep_lo - 336.0 / 9.7) < 1e-9 * (336.0 / 9.7));

  // Identical g: never resolved.
  CenterDescriptor twin = a;
  twin.label = "twin";
  CHECK_FALSE(resolvability(a, twin, 336e9).resolved);
  CHECK(resolvability(a, twin, 336e9).separation_over_width ==
        doctest::Approx(0.0));

  // Monotone in nu at fixed field-domain linewidth.
  double previous = 0.0;
  for (const double nu : {9.7e9, 120e9, 240e9, 336e9}) {
    const double ratio = resolvability(a, b, nu).separation_over_width;
    CHECK(ratio > previous);
    previous = ratio;
  }
}

TEST_CASE("endor_frequencies: nuclear separation at high and low field") {
  // 29Si and 13C Larmor frequencies at 8.55 T (240 GHz) and 0.35 T.
  const auto [si_lo, si_hi] = endor_frequencies(constants.gamma_si29, 8.55, 0.0);
  const auto [c_lo, c_hi] = endor_frequencies(constants.gamma_c13, 8.55, 0.0);
  CHECK(si_lo == doctest::Approx(72.4e6).epsilon(2e-3));
  CHECK(c_lo == doctest::Approx(91.5e6).epsilon(2e-3));
  CHECK(c_lo - si_lo == doctest::Approx(19.1e6).epsilon(0.01));

  const auto [si_x, unused_si] = endor_frequencies(constants.gamma_si29, 0.35, 0.0);
  const auto [c_x, unused_c] = endor_frequencies(constants.gamma_c13, 0.35, 0.0);
  CHECK(c_x - si_x == doctest::Approx(0.78e6).epsilon(0.02));

  // a = 0: the pair collapses onto the Larmor frequency.
  CHECK(si_lo == si_hi);

  // Midpoint of the pair is the Larmor frequency, exactly (first order).
  const double a = 3.2e6;
  const auto [lo, hi] = endor_frequencies(constants.gamma_c13, 8.55, a);
  CHECK(0.5 * (lo + hi) ==
        doctest::Approx(constants.gamma_c13 * 8.55).epsilon(1e-12));
  CHECK(hi - lo == doctest::Approx(a).epsilon(1e-12));

  CHECK_THROWS_AS(endor_frequencies(constants.gamma_c13, 0.0, 0.0),
                  std::invalid_argument);
}
