#ifndef CLIPTRAP_SPECIES_HPP
#define CLIPTRAP_SPECIES_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "cliptrap/constants.hpp"
#include "cliptrap/errors.hpp"
#include "cliptrap/io/keyvalue.hpp"

namespace cliptrap {

// Atomic data consumed by the loading model: the cycling transition
// |g> <-> |e> and the radiative leak |e> -> |d> into the trappable state.
struct Species {
  std::string name;
  double mass = 0.0;                  // kg
  double magnetic_moment = 0.0;       // J/T, of the magnetically trapped state
  double gamma_eg = 0.0;              // rad/s, cycling-transition linewidth
  double gamma_ed = 0.0;              // 1/s, leak rate into the metastable state
  double branching_ratio_eg_ed = 0.0; // gamma_eg / gamma_ed
  double saturation_intensity = 0.0;  // W/m^2
  double mot_wavelength = 0.0;        // m

  // Informational only; no formula consumes these.
  std::optional<double> repump_linewidth;        // rad/s of the |d> <-> |m> repump line
  std::optional<double> pumping_branching_ratio; // gamma_mg / gamma_md of a future pumping path

  void validate() const {
    detail::require(mass > 0.0, "species '" + name + "': mass must be > 0");
    detail::require(magnetic_moment > 0.0, "species '" + name + "': magnetic moment must be > 0");
    detail::require(gamma_eg > 0.0, "species '" + name + "': gamma_eg must be > 0");
    detail::require(gamma_ed > 0.0, "species '" + name + "': gamma_ed must be > 0");
    detail::require(branching_ratio_eg_ed > 0.0, "species '" + name + "': branching ratio must be > 0");
    const double ratio = gamma_eg / gamma_ed;
    detail::require(std::abs(ratio / branching_ratio_eg_ed - 1.0) <= 0.01,
                    "species '" + name + "': gamma_eg/gamma_ed disagrees with branching ratio by more than 1%");
  }
};

// MOT light and cloud parameters.
struct MotBeamParams {
  double total_saturation = HUGE_VAL;  // I/I_sat summed over beams; +inf = saturated
  double detuning = 0.0;               // rad/s, negative = red
  double n_mot = 0.0;                  // atoms
  double temperature = 0.0;            // K
  double sigma_radial = 0.0;           // m, 1/sqrt(e) radius
  double sigma_axial = 0.0;            // m

  void validate() const {
    detail::require(total_saturation >= 0.0, "MOT: total saturation must be >= 0");
    detail::require(n_mot >= 0.0, "MOT: atom number must be >= 0");
    detail::require(temperature > 0.0, "MOT: temperature must be > 0");
    detail::require(sigma_radial > 0.0 && sigma_axial > 0.0, "MOT: cloud sizes must be > 0");
  }
};

// 52Cr: 7S3 <-> 7P4 MOT line at 425.6 nm, leak 7P4 -> 5D4.
inline Species chromium_52() {
  Species s;
  s.name = "Cr52";
  s.mass = 52.0 * Constants::atomic_mass_unit;
  s.magnetic_moment = 6.0 * Constants::bohr_magneton;
  s.gamma_eg = two_pi * 5.02e6;
  s.branching_ratio_eg_ed = 2.5e5;
  s.gamma_ed = s.gamma_eg / s.branching_ratio_eg_ed;
  s.saturation_intensity = 85.2;  // 8.52 mW/cm^2
  s.mot_wavelength = 425.6e-9;
  s.repump_linewidth = two_pi * 127.0;
  s.pumping_branching_ratio = 5200.0;
  return s;
}

// Steady-state two-level excited fraction s/2 / (1 + s + (2 delta/Gamma)^2).
// total_saturation = +inf gives exactly 1/2.
inline double excited_fraction(const MotBeamParams& beams, const Species& species) {
  const double s = beams.total_saturation;
  detail::require(s >= 0.0, "excited_fraction: saturation must be >= 0");
  if (std::isinf(s)) return 0.5;
  const double d = 2.0 * beams.detuning / species.gamma_eg;
  return 0.5 * s / (1.0 + s + d * d);
}

// Keys: name, mass_amu, mu_bohr, gamma_eg_hz (Gamma/2pi), branching_eg_ed,
// isat_mw_cm2, wavelength_nm. Optional: repump_linewidth_hz, pumping_branching.
inline Species species_from_config(const io::KeyValueConfig& cfg) {
  Species s;
  s.name = cfg.get_string("name");
  s.mass = cfg.get_double("mass_amu") * Constants::atomic_mass_unit;
  s.magnetic_moment = cfg.get_double("mu_bohr") * Constants::bohr_magneton;
  s.gamma_eg = two_pi * cfg.get_double("gamma_eg_hz");
  s.branching_ratio_eg_ed = cfg.get_double("branching_eg_ed");
  detail::require(s.branching_ratio_eg_ed > 0.0, "config key 'branching_eg_ed' must be > 0");
  s.gamma_ed = s.gamma_eg / s.branching_ratio_eg_ed;
  s.saturation_intensity = cfg.get_double("isat_mw_cm2") * 10.0;  // mW/cm^2 -> W/m^2
  s.mot_wavelength = cfg.get_double("wavelength_nm") * 1e-9;
  if (auto v = cfg.find_double("repump_linewidth_hz")) s.repump_linewidth = two_pi * *v;
  if (auto v = cfg.find_double("pumping_branching")) s.pumping_branching_ratio = *v;
  s.validate();
  return s;
}

}  // namespace cliptrap

#endif
