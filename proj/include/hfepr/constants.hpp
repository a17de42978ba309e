// Physical constants used throughout the toolkit.
//
// Single source of truth: every module reads this table, nothing
// re-declares its own literals. SI values from the 2018 CODATA set
// (h and k are exact since the 2019 SI redefinition).

#pragma once

namespace hfepr {

struct PhysicalConstants {
  double planck_h = 6.62607015e-34;  // J s (exact)
  // Derived, not an independent literal: keeps h-based and hbar-based
  // expressions consistent to machine precision.
  double hbar = 6.62607015e-34 / 6.283185307179586476925286766559;
  double boltzmann_k = 1.380649e-23;  // J/K (exact)
  double bohr_magneton = 9.2740100783e-24;  // J/T
  double nuclear_magneton = 5.0507837461e-27;  // J/T
  double free_electron_g = 2.00231930436256;

  // Gyromagnetic ratios, gamma/2pi in Hz/T. Signed: a negative value
  // means the magnetic moment is anti-parallel to the spin.
  double gamma_si29 = -8.4655e6;
  double gamma_c13 = 10.7084e6;
  double gamma_p31 = 17.235e6;
  double gamma_n14 = 3.0777e6;
  double gamma_h1 = 42.5774785e6;
};

inline constexpr PhysicalConstants constants{};

// Gyromagnetic ratio lookup by isotope label ("29Si", "13C", "31P",
// "14N", "1H"); throws std::invalid_argument for unknown labels.
double gyromagnetic_ratio(const char* isotope);

}  // namespace hfepr
