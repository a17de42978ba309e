// Field-swept EPR spectrum synthesis (first-order, high-field) and
// ENDOR frequency positions.

#pragma once

#include <string>
#include <vector>

namespace hfepr {

// One paramagnetic center: g-value, first-order hyperfine multiplets,
// weight and lineshape. Lineshape is pseudo-Voigt: Gaussian by default,
// lorentzian_fraction in [0, 1].
struct HyperfineLine {
  double a_hz = 0.0;          // isotropic splitting
  double quantum_number = 0;  // nuclear I; 2I+1 lines, first order
  bool operator==(const HyperfineLine&) const = default;
};

struct CenterDescriptor {
  std::string label;
  double g = 2.0;
  std::vector<HyperfineLine> hyperfine_lines;
  double relative_weight = 1.0;
  double fwhm_tesla = 1e-4;          // Gaussian FWHM
  double lorentzian_fraction = 0.0;  // pseudo-Voigt mixing
  bool operator==(const CenterDescriptor&) const = default;
};

struct Spectrum {
  std::vector<double> axis;       // tesla (field sweep) or Hz
  std::vector<double> intensity;  // arbitrary units
  double nu_hz = 0.0;             // operating frequency
  std::vector<std::string> warnings;
};

// First-order resonance field B = h nu / (g mu_B) - m_I a h / (g mu_B).
double resonance_field(double g, double nu_hz, double m_i = 0.0,
                       double a_hz = 0.0);

// All first-order line positions (tesla) and weights of one center.
std::vector<std::pair<double, double>> center_lines(
    const CenterDescriptor& center, double nu_hz);

// Weight-preserving centroid of a center's multiplet (tesla).
double center_centroid(const CenterDescriptor& center, double nu_hz);

struct SpectrumOptions {
  bool derivative = false;  // CW convention: first derivative display
};

// Sum of normalized lineshapes over centers and m_I combinations on the
// given field grid. A grid that does not cover every line by at least
// two linewidths is reported in Spectrum::warnings, not an error.
Spectrum synthesize_epr_spectrum(const std::vector<CenterDescriptor>& centers,
                                 double nu_hz,
                                 const std::vector<double>& field_grid_tesla,
                                 SpectrumOptions options = {});

struct Resolvability {
  bool resolved = false;
  double separation_over_width = 0.0;
};

// Rayleigh-like criterion: centroids are resolved when their separation
// is at least twice the mean FWHM.
Resolvability resolvability(const CenterDescriptor& center1,
                            const CenterDescriptor& center2, double nu_hz);

// First-order ENDOR pair {|nu_larmor - a/2|, |nu_larmor + a/2|} in Hz
// for S = 1/2; nu_larmor = |gamma_n| B0.
std::pair<double, double> endor_frequencies(double gamma_n_hz_per_t,
                                            double b0_tesla, double a_hz);

}  // namespace hfepr
