#include "hfepr/spin.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hfepr/constants.hpp"

namespace hfepr {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

bool is_half_integer(double j) {
  const double twice = 2.0 * j;
  return j > 0.0 && std::abs(twice - std::round(twice)) < 1e-9;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

double gyromagnetic_ratio(const char* isotope) {
  const std::string s(isotope);
  if (s == "29Si") return constants.gamma_si29;
  if (s == "13C") return constants.gamma_c13;
  if (s == "31P") return constants.gamma_p31;
  if (s == "14N") return constants.gamma_n14;
  if (s == "1H") return constants.gamma_h1;
  throw std::invalid_argument("unknown isotope label: " + s);
}

SpinSpecies electron(double g, std::string label) {
  return SpinSpecies{std::move(label), SpinKind::Electron, 0.5, g};
}

SpinSpecies nucleus(std::string isotope, double gamma_hz_per_t,
                    double quantum_number) {
  return SpinSpecies{std::move(isotope), SpinKind::Nuclear, quantum_number,
                     gamma_hz_per_t};
}

SpinOperators spin_operators(double j) {
  if (!is_half_integer(j))
    throw std::invalid_argument("spin quantum number must be a positive half-integer");
  const int dim = static_cast<int>(2.0 * j + 1.5);
  SpinOperators ops;
  ops.jz = Matrix::Zero(dim, dim);
  ops.j_plus = Matrix::Zero(dim, dim);
  for (int row = 0; row < dim; ++row) {
    const double m = j - row;  // basis ordered m = j ... -j
    ops.jz(row, row) = m;
    if (row > 0) {
      // <m+1| J+ |m> with m the state in column `row`
      ops.j_plus(row - 1, row) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
  }
  ops.j_minus = ops.j_plus.adjoint();
  ops.jx = 0.5 * (ops.j_plus + ops.j_minus);
  ops.jy = -0.5 * kI * (ops.j_plus - ops.j_minus);
  return ops;
}

SpinSystem::SpinSystem(std::vector<SpinSpecies> species,
                       std::vector<HyperfineCoupling> couplings,
                       int dimension_cap)
    : species_(std::move(species)), couplings_(std::move(couplings)) {
  if (species_.empty()) throw std::invalid_argument("SpinSystem needs at least one species");
  long dim = 1;
  for (const auto& sp : species_) {
    if (!is_half_integer(sp.quantum_number))
      throw std::invalid_argument("quantum number of '" + sp.label +
                                  "' must be a positive half-integer");
    dim *= sp.multiplicity();
    if (dim > dimension_cap)
      throw std::invalid_argument(
          "Hilbert dimension exceeds cap of " + std::to_string(dimension_cap));
  }
  dimension_ = static_cast<int>(dim);

  for (const auto& c : couplings_) {
    const bool in_range =
        c.electron_index >= 0 && c.electron_index < static_cast<int>(species_.size()) &&
        c.nuclear_index >= 0 && c.nuclear_index < static_cast<int>(species_.size());
    if (!in_range || species_[c.electron_index].kind != SpinKind::Electron ||
        species_[c.nuclear_index].kind != SpinKind::Nuclear)
      throw std::invalid_argument(
          "hyperfine coupling must reference one electron and one nuclear species");
  }

  labels_.assign(dimension_, std::vector<double>(species_.size()));
  for (int state = 0; state < dimension_; ++state) {
    int rem = state;
    for (int s = static_cast<int>(species_.size()) - 1; s >= 0; --s) {
      const int mult = species_[s].multiplicity();
      const int local = rem % mult;
      rem /= mult;
      labels_[state][s] = species_[s].quantum_number - local;
    }
  }
}

Matrix SpinSystem::embedded(int index, const Matrix& local_op) const {
  if (index < 0 || index >= static_cast<int>(species_.size()))
    throw std::invalid_argument("species index out of range");
  Matrix out = Matrix::Identity(1, 1);
  for (int s = 0; s < static_cast<int>(species_.size()); ++s) {
    const int mult = species_[s].multiplicity();
    out = kron(out, s == index ? local_op : Matrix::Identity(mult, mult));
  }
  return out;
}

Matrix SpinSystem::jx(int index) const {
  return embedded(index, spin_operators(species_[index].quantum_number).jx);
}
Matrix SpinSystem::jy(int index) const {
  return embedded(index, spin_operators(species_[index].quantum_number).jy);
}
Matrix SpinSystem::jz(int index) const {
  return embedded(index, spin_operators(species_[index].quantum_number).jz);
}
Matrix SpinSystem::j_plus(int index) const {
  return embedded(index, spin_operators(species_[index].quantum_number).j_plus);
}
Matrix SpinSystem::j_minus(int index) const {
  return embedded(index, spin_operators(species_[index].quantum_number).j_minus);
}

Matrix SpinSystem::total_jz() const {
  Matrix out = Matrix::Zero(dimension_, dimension_);
  for (int s = 0; s < static_cast<int>(species_.size()); ++s) out += jz(s);
  return out;
}

Matrix lab_hamiltonian(const SpinSystem& system, double b0_tesla) {
  if (b0_tesla < 0.0) throw std::invalid_argument("B0 must be >= 0");
  const double two_pi = 2.0 * std::numbers::pi;
  const int dim = system.dimension();
  Matrix h = Matrix::Zero(dim, dim);
  const auto& species = system.species();
  for (int s = 0; s < static_cast<int>(species.size()); ++s) {
    if (species[s].kind == SpinKind::Electron) {
      h += (species[s].g_or_gamma * constants.bohr_magneton * b0_tesla /
            constants.hbar) *
           system.jz(s);
    } else {
      h -= two_pi * species[s].g_or_gamma * b0_tesla * system.jz(s);
    }
  }
  for (const auto& c : system.couplings()) {
    const Matrix si = system.jx(c.electron_index) * system.jx(c.nuclear_index) +
                      system.jy(c.electron_index) * system.jy(c.nuclear_index) +
                      system.jz(c.electron_index) * system.jz(c.nuclear_index);
    h += two_pi * c.a_hz * si;
  }
  return 0.5 * (h + Matrix(h.adjoint()));  // remove round-off skew
}

double hermiticity_defect(const Matrix& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (m - Matrix(m.adjoint())).cwiseAbs().maxCoeff() / scale;
}

}  // namespace hfepr
