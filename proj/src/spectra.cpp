#include "hfepr/spectra.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hfepr/constants.hpp"

namespace hfepr {

namespace {

// Unit-integral Gaussian / Lorentzian profiles and their derivatives,
// parameterized by FWHM.
double gaussian_profile(double x, double fwhm) {
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double gaussian_derivative(double x, double fwhm) {
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  return -x / (sigma * sigma) * gaussian_profile(x, fwhm);
}

double lorentzian_profile(double x, double fwhm) {
  const double hwhm = 0.5 * fwhm;
  return hwhm / (std::numbers::pi * (x * x + hwhm * hwhm));
}

double lorentzian_derivative(double x, double fwhm) {
  const double hwhm = 0.5 * fwhm;
  const double denom = x * x + hwhm * hwhm;
  return -2.0 * x * hwhm / (std::numbers::pi * denom * denom);
}

double pseudo_voigt(double x, double fwhm, double lorentzian_fraction,
                    bool derivative) {
  const double eta = lorentzian_fraction;
  if (derivative)
    return (1.0 - eta) * gaussian_derivative(x, fwhm) +
           eta * lorentzian_derivative(x, fwhm);
  return (1.0 - eta) * gaussian_profile(x, fwhm) +
         eta * lorentzian_profile(x, fwhm);
}

void validate(const CenterDescriptor& c) {
  if (c.g <= 0.0) throw std::invalid_argument("center g-value must be > 0");
  if (c.relative_weight < 0.0)
    throw std::invalid_argument("center weight must be >= 0");
  if (c.fwhm_tesla <= 0.0)
    throw std::invalid_argument("center linewidth must be > 0");
  if (c.lorentzian_fraction < 0.0 || c.lorentzian_fraction > 1.0)
    throw std::invalid_argument("Lorentzian fraction must be in [0, 1]");
}

}  // namespace

double resonance_field(double g, double nu_hz, double m_i, double a_hz) {
  if (g <= 0.0) throw std::invalid_argument("g must be > 0");
  const double denom = g * constants.bohr_magneton;
  return constants.planck_h * nu_hz / denom -
         m_i * a_hz * constants.planck_h / denom;
}

std::vector<std::pair<double, double>> center_lines(
    const CenterDescriptor& center, double nu_hz) {
  validate(center);
  // First-order multiplets: tensor product over coupled nuclei, every
  // m_I combination an equal share of the center weight.
  std::vector<std::pair<double, double>> lines = {
      {0.0, center.relative_weight}};  // (field shift accumulator, weight)
  for (const auto& hf : center.hyperfine_lines) {
    const int mult = static_cast<int>(2.0 * hf.quantum_number + 1.5);
    std::vector<std::pair<double, double>> next;
    next.reserve(lines.size() * mult);
    for (const auto& [shift, weight] : lines)
      for (int k = 0; k < mult; ++k) {
        const double m_i = hf.quantum_number - k;
        next.emplace_back(
            shift + m_i * hf.a_hz * constants.planck_h /
                        (center.g * constants.bohr_magneton),
            weight / mult);
      }
    lines = std::move(next);
  }
  const double b_center = resonance_field(center.g, nu_hz);
  for (auto& [shift, weight] : lines) shift = b_center - shift;
  return lines;
}

double center_centroid(const CenterDescriptor& center, double nu_hz) {
  double centroid = 0.0, total = 0.0;
  for (const auto& [field, weight] : center_lines(center, nu_hz)) {
    centroid += field * weight;
    total += weight;
  }
  return total > 0.0 ? centroid / total : resonance_field(center.g, nu_hz);
}

Spectrum synthesize_epr_spectrum(const std::vector<CenterDescriptor>& centers,
                                 double nu_hz,
                                 const std::vector<double>& field_grid_tesla,
                                 SpectrumOptions options) {
  if (centers.empty())
    throw std::invalid_argument("spectrum synthesis needs at least one center");
  if (field_grid_tesla.size() < 2)
    throw std::invalid_argument("field grid needs at least two points");
  for (std::size_t i = 1; i < field_grid_tesla.size(); ++i)
    if (field_grid_tesla[i] <= field_grid_tesla[i - 1])
      throw std::invalid_argument("field grid must be strictly increasing");

  Spectrum spectrum;
  spectrum.axis = field_grid_tesla;
  spectrum.intensity.assign(field_grid_tesla.size(), 0.0);
  spectrum.nu_hz = nu_hz;

  for (const auto& center : centers) {
    for (const auto& [field, weight] : center_lines(center, nu_hz)) {
      if (field < field_grid_tesla.front() + 2.0 * center.fwhm_tesla ||
          field > field_grid_tesla.back() - 2.0 * center.fwhm_tesla)
        spectrum.warnings.push_back("line of center '" + center.label +
                                    "' not fully covered by the field grid");
      for (std::size_t i = 0; i < field_grid_tesla.size(); ++i)
        spectrum.intensity[i] +=
            weight * pseudo_voigt(field_grid_tesla[i] - field,
                                  center.fwhm_tesla,
                                  center.lorentzian_fraction,
                                  options.derivative);
    }
  }
  return spectrum;
}

Resolvability resolvability(const CenterDescriptor& center1,
                            const CenterDescriptor& center2, double nu_hz) {
  validate(center1);
  validate(center2);
  const double separation =
      std::abs(center_centroid(center1, nu_hz) - center_centroid(center2, nu_hz));
  const double mean_width = 0.5 * (center1.fwhm_tesla + center2.fwhm_tesla);
  Resolvability out;
  out.separation_over_width = separation / mean_width;
  out.resolved = out.separation_over_width >= 2.0;
  return out;
}

std::pair<double, double> endor_frequencies(double gamma_n_hz_per_t,
                                            double b0_tesla, double a_hz) {
  if (b0_tesla <= 0.0) throw std::invalid_argument("B0 must be > 0");
  const double larmor = std::abs(gamma_n_hz_per_t) * b0_tesla;
  return {std::abs(larmor - 0.5 * a_hz), std::abs(larmor + 0.5 * a_hz)};
}

}  // namespace hfepr
