// Spin species, spin systems and angular-momentum operator algebra on
// small electron-nuclear product Hilbert spaces.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace hfepr {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class SpinKind { Electron, Nuclear };

struct SpinSpecies {
  std::string label;
  SpinKind kind = SpinKind::Electron;
  double quantum_number = 0.5;  // j, half-integer >= 1/2
  // Electron: dimensionless g-value. Nuclear: gyromagnetic ratio in Hz/T
  // (signed).
  double g_or_gamma = 2.0;

  int multiplicity() const { return static_cast<int>(2.0 * quantum_number + 1.5); }
};

SpinSpecies electron(double g, std::string label = "e");
SpinSpecies nucleus(std::string isotope, double gamma_hz_per_t,
                    double quantum_number = 0.5);

// Isotropic hyperfine coupling a (Hz) between one electron and one
// nuclear species, referenced by index into SpinSystem::species.
struct HyperfineCoupling {
  int electron_index = 0;
  int nuclear_index = 0;
  double a_hz = 0.0;
};

// Single-spin operator set for quantum number j.
struct SpinOperators {
  Matrix jx, jy, jz, j_plus, j_minus;
};

// Standard angular-momentum matrices of dimension 2j+1, basis ordered
// m = j ... -j. Throws std::invalid_argument unless 2j is a positive
// integer.
SpinOperators spin_operators(double j);

class SpinSystem {
 public:
  explicit SpinSystem(std::vector<SpinSpecies> species,
                      std::vector<HyperfineCoupling> couplings = {},
                      int dimension_cap = kDefaultDimensionCap);

  static constexpr int kDefaultDimensionCap = 64;

  const std::vector<SpinSpecies>& species() const { return species_; }
  const std::vector<HyperfineCoupling>& couplings() const { return couplings_; }
  int dimension() const { return dimension_; }

  // Operator of species `index` embedded in the product space.
  Matrix embedded(int index, const Matrix& local_op) const;
  Matrix jx(int index) const;
  Matrix jy(int index) const;
  Matrix jz(int index) const;
  Matrix j_plus(int index) const;
  Matrix j_minus(int index) const;

  // Sum of jz over all species (conserved by isotropic hyperfine).
  Matrix total_jz() const;

  // Basis labels: one m-value tuple per product state, species order.
  const std::vector<std::vector<double>>& basis_labels() const {
    return labels_;
  }

 private:
  std::vector<SpinSpecies> species_;
  std::vector<HyperfineCoupling> couplings_;
  int dimension_ = 1;
  std::vector<std::vector<double>> labels_;
};

// Lab-frame static Hamiltonian in angular-frequency units (rad/s):
//   H = sum_e g mu_B B0 Sz / hbar - sum_n 2 pi gamma_n B0 Iz
//       + sum_couplings 2 pi a (S.I)
// B0 in tesla, >= 0.
Matrix lab_hamiltonian(const SpinSystem& system, double b0_tesla);

// Largest |H - H^dagger| entry relative to |H|; used by validity checks.
double hermiticity_defect(const Matrix& m);

}  // namespace hfepr
