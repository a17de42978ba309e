// Density operators on spin product spaces: thermal (Boltzmann) states,
// unitary evolution and polarization readout.

#pragma once

#include <vector>

#include "hfepr/spin.hpp"

namespace hfepr {

// Hermitian unit-trace operator over the product basis. Factories
// validate the invariants (hermiticity and unit trace to 1e-12
// relative, eigenvalues >= -1e-10) and throw std::invalid_argument on
// violation.
struct DensityState {
  Matrix rho;
  std::vector<std::vector<double>> basis_labels;  // (m_S, m_I, ...) per state

  int dimension() const { return static_cast<int>(rho.rows()); }
};

DensityState make_density(Matrix rho,
                          std::vector<std::vector<double>> labels = {});

// Boltzmann state rho = exp(-hbar H / kT) / Z of a Hamiltonian given in
// rad/s, computed by Hermitian eigendecomposition. T must be > 0.
DensityState thermal_state(const Matrix& hamiltonian_rad_per_s, double temp_k,
                           std::vector<std::vector<double>> labels = {});

// rho -> U rho U^dagger with U = exp(-i H t), eigendecomposition route.
DensityState evolve(const DensityState& state, const Matrix& hamiltonian_rad_per_s,
                    double time_s);

// Reduced density matrix of one species (partial trace over the rest).
Matrix reduced_state(const DensityState& state, const SpinSystem& system,
                     int species_index);

// Two-level polarization P = (p_lower - p_upper) / (p_lower + p_upper)
// of a spin-1/2 species; +1 means fully in the energetically lower
// Zeeman level (electron with g > 0: m = -1/2; nucleus: sign of gamma
// decides). Throws for quantum number != 1/2 -- use z_polarization for
// the general-j mode.
double polarization(const DensityState& state, const SpinSystem& system,
                    int species_index);

// General-j longitudinal polarization, -<Jz>/j signed so that it equals
// the two-level P for j = 1/2. Range [-1, 1].
double z_polarization(const DensityState& state, const SpinSystem& system,
                      int species_index);

double purity(const DensityState& state);

// <A> = tr(rho A) for a Hermitian observable (real part returned).
double expectation(const DensityState& state, const Matrix& observable);

}  // namespace hfepr
