#include "hfepr/density.hpp"

#include <cmath>
#include <stdexcept>

#include "hfepr/constants.hpp"

namespace hfepr {

namespace {

constexpr double kHermTol = 1e-12;
constexpr double kTraceTol = 1e-12;
constexpr double kEigenFloor = -1e-10;

// +1 when the m = +j level is the energetically lower Zeeman level of
// the species, -1 when m = -j is (electron with g > 0, or gamma < 0).
int lower_level_sign(const SpinSpecies& sp) {
  if (sp.kind == SpinKind::Electron) return sp.g_or_gamma > 0.0 ? -1 : +1;
  return sp.g_or_gamma >= 0.0 ? +1 : -1;
}

void validate(const DensityState& state) {
  if (state.rho.rows() != state.rho.cols())
    throw std::invalid_argument("density matrix must be square");
  if (hermiticity_defect(state.rho) > kHermTol)
    throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(state.rho.trace().real() - 1.0) > kTraceTol ||
      std::abs(state.rho.trace().imag()) > kTraceTol)
    throw std::invalid_argument("density matrix trace must be 1");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(state.rho);
  if (solver.eigenvalues().minCoeff() < kEigenFloor)
    throw std::invalid_argument("density matrix has a negative eigenvalue");
}

}  // namespace

DensityState make_density(Matrix rho, std::vector<std::vector<double>> labels) {
  DensityState state{std::move(rho), std::move(labels)};
  validate(state);
  return state;
}

DensityState thermal_state(const Matrix& hamiltonian_rad_per_s, double temp_k,
                           std::vector<std::vector<double>> labels) {
  if (temp_k <= 0.0)
    throw std::invalid_argument("temperature must be > 0 K");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hamiltonian_rad_per_s);
  const Eigen::VectorXd energies = solver.eigenvalues();  // rad/s
  const double beta = constants.hbar / (constants.boltzmann_k * temp_k);
  // Shift by the ground energy before exponentiating.
  const double e0 = energies.minCoeff();
  Eigen::VectorXd weights(energies.size());
  for (int i = 0; i < energies.size(); ++i)
    weights(i) = std::exp(-beta * (energies(i) - e0));
  weights /= weights.sum();
  Matrix rho = solver.eigenvectors() * weights.asDiagonal() *
               solver.eigenvectors().adjoint();
  rho = 0.5 * (rho + Matrix(rho.adjoint()));
  return DensityState{std::move(rho), std::move(labels)};
}

DensityState evolve(const DensityState& state, const Matrix& hamiltonian_rad_per_s,
                    double time_s) {
  if (time_s < 0.0) throw std::invalid_argument("evolution time must be >= 0");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hamiltonian_rad_per_s);
  Vector phases(solver.eigenvalues().size());
  for (int i = 0; i < phases.size(); ++i)
    phases(i) = std::exp(std::complex<double>(0.0, -solver.eigenvalues()(i) * time_s));
  const Matrix u =
      solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
  Matrix rho = u * state.rho * u.adjoint();
  rho = 0.5 * (rho + Matrix(rho.adjoint()));
  return DensityState{std::move(rho), state.basis_labels};
}

Matrix reduced_state(const DensityState& state, const SpinSystem& system,
                     int species_index) {
  const auto& species = system.species();
  if (species_index < 0 || species_index >= static_cast<int>(species.size()))
    throw std::invalid_argument("species index out of range");
  if (state.dimension() != system.dimension())
    throw std::invalid_argument("state dimension does not match system");

  int left = 1;
  for (int s = 0; s < species_index; ++s) left *= species[s].multiplicity();
  const int mid = species[species_index].multiplicity();
  const int right = system.dimension() / (left * mid);

  Matrix out = Matrix::Zero(mid, mid);
  for (int a = 0; a < mid; ++a)
    for (int b = 0; b < mid; ++b)
      for (int l = 0; l < left; ++l)
        for (int r = 0; r < right; ++r)
          out(a, b) += state.rho((l * mid + a) * right + r, (l * mid + b) * right + r);
  return out;
}

double polarization(const DensityState& state, const SpinSystem& system,
                    int species_index) {
  const SpinSpecies& sp = system.species()[species_index];
  if (std::abs(sp.quantum_number - 0.5) > 1e-12)
    throw std::invalid_argument(
        "polarization is defined for spin-1/2 species; use z_polarization");
  const Matrix reduced = reduced_state(state, system, species_index);
  // Local basis is ordered m = +1/2, -1/2.
  const double p_up = reduced(0, 0).real();
  const double p_down = reduced(1, 1).real();
  const double p_lower = lower_level_sign(sp) > 0 ? p_up : p_down;
  const double p_upper = lower_level_sign(sp) > 0 ? p_down : p_up;
  return (p_lower - p_upper) / (p_lower + p_upper);
}

double z_polarization(const DensityState& state, const SpinSystem& system,
                      int species_index) {
  const SpinSpecies& sp = system.species()[species_index];
  const Matrix reduced = reduced_state(state, system, species_index);
  const Matrix jz = spin_operators(sp.quantum_number).jz;
  const double mean_jz = (reduced * jz).trace().real();
  return lower_level_sign(sp) * mean_jz / sp.quantum_number;
}

double purity(const DensityState& state) {
  return (state.rho * state.rho).trace().real();
}

double expectation(const DensityState& state, const Matrix& observable) {
  return (state.rho * observable).trace().real();
}

}  // namespace hfepr
