#ifndef CLIPTRAP_CONSTANTS_HPP
#define CLIPTRAP_CONSTANTS_HPP

#include <numbers>

// SI everywhere inside the library. Gauss-derived units and cm^3 only appear
// at the I/O boundary, via the converters below.
namespace cliptrap {

struct Constants {
  // CODATA 2018 (k_B exact since the 2019 SI redefinition).
  static constexpr double boltzmann_constant = 1.380649e-23;       // J/K
  static constexpr double bohr_magneton = 9.2740100783e-24;        // J/T
  static constexpr double atomic_mass_unit = 1.66053906660e-27;    // kg
  // Standard gravity (CGPM 1901).
  static constexpr double gravitational_acceleration = 9.80665;    // m/s^2
};

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Field units. 1 G = 1e-4 T, 1 G/cm = 1e-2 T/m, 1 G/cm^2 = 1 T/m^2.
// Inverses divide by the same factor so that round trips stay within 1 ulp.
constexpr double gauss_to_si(double gauss) { return gauss * 1e-4; }
constexpr double gauss_per_cm_to_si(double g_per_cm) { return g_per_cm * 1e-2; }
constexpr double gauss_per_cm2_to_si(double g_per_cm2) { return g_per_cm2; }
constexpr double si_to_gauss(double tesla) { return tesla / 1e-4; }
constexpr double si_to_gauss_per_cm(double t_per_m) { return t_per_m / 1e-2; }
constexpr double si_to_gauss_per_cm2(double t_per_m2) { return t_per_m2; }

constexpr double milligauss_to_si(double mg) { return mg * 1e-7; }
constexpr double si_to_milligauss(double tesla) { return tesla / 1e-7; }

// Volumes and rate coefficients.
constexpr double cm3_to_si(double cm3) { return cm3 * 1e-6; }
constexpr double si_to_cm3(double m3) { return m3 / 1e-6; }
constexpr double per_cm3_to_si(double v) { return v * 1e6; }
constexpr double si_to_per_cm3(double v) { return v / 1e6; }
constexpr double per_cm2_to_si(double v) { return v * 1e4; }
constexpr double si_to_per_cm2(double v) { return v / 1e4; }

constexpr double microkelvin_to_si(double uk) { return uk * 1e-6; }
constexpr double si_to_microkelvin(double k) { return k / 1e-6; }
constexpr double mm_to_si(double mm) { return mm * 1e-3; }
constexpr double si_to_mm(double m) { return m / 1e-3; }

}  // namespace cliptrap

#endif
