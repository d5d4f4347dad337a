#ifndef CLIPTRAP_TRAP_HPP
#define CLIPTRAP_TRAP_HPP

#include <cmath>

#include "cliptrap/constants.hpp"
#include "cliptrap/errors.hpp"
#include "cliptrap/species.hpp"

namespace cliptrap {

// Ioffe-Pritchard trap in the separable approximation: linear 2D quadrupole
// in (x, y) with gradient B', harmonic along z with curvature B'' and
// offset B0. Gravity acts along +y (potential m g y).
//
// Axial convention: |B(0,0,z)| = B0 + B'' z^2 / 2, so that the axial
// potential is mu B'' z^2 / 2 and sigma_z = sqrt(kT / (mu B'')).
struct IpTrapConfig {
  double radial_gradient = 0.0;       // T/m
  double axial_curvature = 0.0;       // T/m^2
  double offset_field = 0.0;          // T, may be negative
  double background_loss_rate = 0.0;  // 1/s

  void validate() const {
    detail::require(radial_gradient > 0.0, "trap: radial gradient must be > 0");
    detail::require(axial_curvature > 0.0, "trap: axial curvature must be > 0");
    detail::require(background_loss_rate >= 0.0, "trap: background loss rate must be >= 0");
    detail::require(std::isfinite(offset_field), "trap: offset field must be finite");
  }
};

inline double field_magnitude(const IpTrapConfig& cfg, double x, double y, double z) {
  const double radial = cfg.radial_gradient * std::hypot(x, y);
  const double axial = cfg.offset_field + 0.5 * cfg.axial_curvature * z * z;
  return std::hypot(radial, axial);
}

// mu B' rho + mu B'' z^2 / 2 (+ m g y). Zero at the origin.
inline double potential_energy(const Species& species, const IpTrapConfig& cfg, double x, double y,
                               double z, bool include_gravity) {
  const double mu = species.magnetic_moment;
  double u = mu * cfg.radial_gradient * std::hypot(x, y) + 0.5 * mu * cfg.axial_curvature * z * z;
  if (include_gravity) u += species.mass * Constants::gravitational_acceleration * y;
  return u;
}

// Majorana losses stay below 0.1/s for offsets of at least 40 mG in this trap.
inline constexpr double majorana_offset_threshold = 4e-6;  // T

// The relative slack absorbs unit-conversion rounding (40 mG -> 4e-6 T).
inline bool majorana_safe(const IpTrapConfig& cfg) {
  return cfg.offset_field >= majorana_offset_threshold * (1.0 - 1e-12);
}

}  // namespace cliptrap

#endif
