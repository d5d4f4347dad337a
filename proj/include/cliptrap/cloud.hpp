#ifndef CLIPTRAP_CLOUD_HPP
#define CLIPTRAP_CLOUD_HPP

#include <cmath>
#include <limits>
#include <optional>

#include "cliptrap/bessel.hpp"
#include "cliptrap/constants.hpp"
#include "cliptrap/errors.hpp"
#include "cliptrap/quadrature.hpp"
#include "cliptrap/species.hpp"
#include "cliptrap/trap.hpp"

namespace cliptrap {

// Thermal cloud in the separable IP potential, sagged by gravity along y:
//   n(x, y, z) = n0 exp(-rho/xi1 - y/xi2 - z^2 / (2 sigma_z^2)).
// Without gravity xi2 is +inf.
struct ThermalCloud {
  double atom_number = 0.0;
  double temperature = 0.0;   // K
  double xi1 = 0.0;           // m, kT / (mu B')
  double xi2 = 0.0;           // m, kT / (m g)
  double sigma_z = 0.0;       // m, sqrt(kT / (mu B''))
  double peak_density = 0.0;  // 1/m^3

  bool has_gravity() const { return std::isfinite(xi2); }
  double inv_xi2() const { return has_gravity() ? 1.0 / xi2 : 0.0; }
};

// Gaussian MOT cloud with 1/sqrt(e) radii.
struct GaussianCloud {
  double atom_number = 0.0;
  double temperature = 0.0;
  double sigma_radial = 0.0;  // m, sigma_x = sigma_y
  double sigma_axial = 0.0;   // m

  void validate() const {
    detail::require(atom_number > 0.0 && temperature > 0.0 && sigma_radial > 0.0 && sigma_axial > 0.0,
                    "GaussianCloud: all fields must be > 0");
  }
};

namespace detail {

// Integration box lengths: exponential tails are cut at e^-40, Gaussian
// tails at 12 sigma (e^-72).
inline constexpr double exp_tail_lengths = 40.0;
inline constexpr double gauss_tail_sigmas = 12.0;

inline double unnormalized_xy(const ThermalCloud& c, double x, double y) {
  return std::exp(-std::hypot(x, y) / c.xi1 - y * c.inv_xi2());
}

inline double unnormalized_z(const ThermalCloud& c, double z) {
  return std::exp(-z * z / (2.0 * c.sigma_z * c.sigma_z));
}

struct CloudBox {
  quad::Breaks x, y, z;
};

inline CloudBox cloud_box(const ThermalCloud& c) {
  const double a = 1.0 / c.xi1;
  const double b = c.inv_xi2();
  const double lx = exp_tail_lengths / a;
  const double y_down = exp_tail_lengths / (a - b);  // sag side, y < 0
  const double y_up = exp_tail_lengths / (a + b);
  const double lz = gauss_tail_sigmas * c.sigma_z;
  return {quad::make_breaks(-lx, lx, {0.0}), quad::make_breaks(-y_down, y_up, {0.0}),
          quad::make_breaks(-lz, lz, {0.0})};
}

// Integrates f(x, y) over the (x, y) plane. The radial profile has a cusp
// along rho = 0, which two substitutions make smooth:
//   inner: x = |y| sinh(u), so sqrt(x^2 + y^2) = |y| cosh(u);
//   outer: y = t^3, which flattens the y^2 ln|y| behaviour of the inner
//          integral at y = 0.
template <class F>
double plane_integral(F&& f, const quad::Breaks& xb, const quad::Breaks& yb, double rel_tol) {
  auto inner = [&](double y) {
    const double ay = std::abs(y);
    if (ay == 0.0) return quad::integrate_1d([&](double x) { return f(x, y); }, xb, 0.1 * rel_tol).value;
    quad::Breaks ub;
    ub.reserve(xb.size());
    for (double x : xb) ub.push_back(std::asinh(x / ay));
    auto g = [&](double u) { return f(ay * std::sinh(u), y) * ay * std::cosh(u); };
    return quad::integrate_1d(g, ub, 0.1 * rel_tol).value;
  };
  quad::Breaks tb;
  tb.reserve(yb.size());
  for (double y : yb) tb.push_back(std::cbrt(y));
  auto outer = [&](double t) { return inner(t * t * t) * 3.0 * t * t; };
  return quad::integrate_1d(outer, tb, rel_tol).value;
}

// Integral of [shape(x, y) shape(z)]^power over all space.
inline double shape_moment(const ThermalCloud& c, int power, double rel_tol = quad::default_rel_tol) {
  const CloudBox box = cloud_box(c);
  const double p = power;
  const double xy = plane_integral([&](double x, double y) { return std::pow(unnormalized_xy(c, x, y), p); },
                                   box.x, box.y, rel_tol);
  const quad::Result z =
      quad::integrate_1d([&](double zz) { return std::pow(unnormalized_z(c, zz), p); }, box.z, rel_tol);
  return xy * z.value;
}

}  // namespace detail

// Scale lengths from T and the trap, with peak_density = 1 and no atom
// number. Requires mu B' > m g when gravity is on, otherwise gravity pulls
// the cloud out and no normalizable density exists.
inline ThermalCloud thermal_cloud_shape(const Species& species, const IpTrapConfig& cfg, double t,
                                        bool include_gravity = true) {
  detail::require(t > 0.0, "make_thermal_cloud: temperature must be > 0");
  cfg.validate();
  const double kt = Constants::boltzmann_constant * t;
  const double mu = species.magnetic_moment;
  const double weight = species.mass * Constants::gravitational_acceleration;
  detail::require(!include_gravity || mu * cfg.radial_gradient > weight,
                  "make_thermal_cloud: radial gradient does not support the atoms against gravity");
  ThermalCloud c;
  c.temperature = t;
  c.xi1 = kt / (mu * cfg.radial_gradient);
  c.xi2 = include_gravity ? kt / weight : std::numeric_limits<double>::infinity();
  c.sigma_z = std::sqrt(kt / (mu * cfg.axial_curvature));
  c.peak_density = 1.0;
  return c;
}

// As above, with n0 normalizing the (sagged) density to n atoms by quadrature.
inline ThermalCloud make_thermal_cloud(const Species& species, const IpTrapConfig& cfg, double n, double t,
                                       bool include_gravity = true) {
  detail::require(n > 0.0, "make_thermal_cloud: atom number must be > 0");
  ThermalCloud c = thermal_cloud_shape(species, cfg, t, include_gravity);
  c.atom_number = n;
  c.peak_density = n / detail::shape_moment(c, 1);
  return c;
}

inline double mt_density(const ThermalCloud& c, double x, double y, double z) {
  return c.peak_density * detail::unnormalized_xy(c, x, y) * detail::unnormalized_z(c, z);
}

// Line-of-sight integral of mt_density along x:
//   2 n0 exp(-y/xi2 - z^2/(2 sigma_z^2)) |y| K1(|y|/xi1),
// with the removable singularity at y = 0 filled by |y| K1(|y|/xi1) -> xi1.
inline double column_density(const ThermalCloud& c, double y, double z) {
  const double u = std::abs(y) / c.xi1;
  return 2.0 * c.peak_density * c.xi1 * x_bessel_k1(u) * std::exp(-y * c.inv_xi2()) *
         detail::unnormalized_z(c, z);
}

inline double mot_density(const GaussianCloud& g, double x, double y, double z) {
  const double sr2 = g.sigma_radial * g.sigma_radial;
  const double sa2 = g.sigma_axial * g.sigma_axial;
  const double norm = g.atom_number / (std::pow(two_pi, 1.5) * sr2 * g.sigma_axial);
  return norm * std::exp(-(x * x + y * y) / (2.0 * sr2) - z * z / (2.0 * sa2));
}

// N^2 / integral(n^2). Uses the cloud's own gravity setting.
inline double occupied_volume(const ThermalCloud& c) {
  const double m1 = detail::shape_moment(c, 1);
  const double m2 = detail::shape_moment(c, 2);
  return m1 * m1 / m2;
}

// Gravity-free closed form 16 pi^(3/2) xi1^2 sigma_z.
inline double occupied_volume_closed_form(const ThermalCloud& c) {
  return 16.0 * std::pow(pi, 1.5) * c.xi1 * c.xi1 * c.sigma_z;
}

// Displacement of the MOT center relative to the magnetic trap center.
struct Offset3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

enum class EffectiveVolumeMode {
  approximate,  // V_eff = V_MT, valid when the MOT is much smaller than the MT
  overlap,      // N_e N_MT / integral(n_e n_MT) by quadrature
};

// Overlap volume 1 / integral(p_MOT p_MT) of the unit-normalized densities.
// The atom numbers cancel, so only the cloud shapes matter.
inline double effective_volume(const GaussianCloud& mot, const ThermalCloud& mt,
                               EffectiveVolumeMode mode = EffectiveVolumeMode::overlap, Offset3 offset = {}) {
  mot.validate();
  if (mode == EffectiveVolumeMode::approximate) return occupied_volume(mt);

  const double norm_mt = detail::shape_moment(mt, 1);
  const double sr = mot.sigma_radial;
  const double sa = mot.sigma_axial;
  const double gauss_norm = 1.0 / (std::pow(two_pi, 1.5) * sr * sr * sa);
  const detail::CloudBox box = detail::cloud_box(mt);
  const double k = detail::gauss_tail_sigmas;

  // The product is negligible outside either cloud, so integrate over the
  // intersection of both boxes with breakpoints at both centers.
  auto clip = [&](const quad::Breaks& b, double center, double sigma) {
    const double lo = std::max(b.front(), center - k * sigma);
    const double hi = std::min(b.back(), center + k * sigma);
    return quad::make_breaks(lo, hi, {0.0, center, center - sigma, center + sigma});
  };
  const quad::Breaks xb = clip(box.x, offset.x, sr);
  const quad::Breaks yb = clip(box.y, offset.y, sr);
  const quad::Breaks zb = clip(box.z, offset.z, sa);
  if (xb.size() < 2 || yb.size() < 2 || zb.size() < 2 || xb.front() >= xb.back() || yb.front() >= yb.back() ||
      zb.front() >= zb.back()) {
    return std::numeric_limits<double>::infinity();
  }

  const double xy = detail::plane_integral(
      [&](double x, double y) {
        const double dx = x - offset.x;
        const double dy = y - offset.y;
        return std::exp(-(dx * dx + dy * dy) / (2.0 * sr * sr)) * detail::unnormalized_xy(mt, x, y);
      },
      xb, yb, quad::default_rel_tol);
  const quad::Result z = quad::integrate_1d(
      [&](double zz) {
        const double dz = zz - offset.z;
        return std::exp(-dz * dz / (2.0 * sa * sa)) * detail::unnormalized_z(mt, zz);
      },
      zb);
  const double overlap = gauss_norm * xy * z.value / norm_mt;
  if (!(overlap > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / overlap;
}

// N_a N_b / integral(n_a n_b) for arbitrary densities over an explicit box.
// Generic and slower than effective_volume; used where the densities do
// not factorize along z.
template <class DensityA, class DensityB>
double overlap_volume(DensityA&& na, DensityB&& nb, const quad::Breaks& xb, const quad::Breaks& yb,
                      const quad::Breaks& zb, double rel_tol = 1e-7) {
  const double a = quad::integrate_3d(na, xb, yb, zb, rel_tol).value;
  const double b = quad::integrate_3d(nb, xb, yb, zb, rel_tol).value;
  const double ab =
      quad::integrate_3d([&](double x, double y, double z) { return na(x, y, z) * nb(x, y, z); }, xb, yb, zb,
                         rel_tol)
          .value;
  return a * b / ab;
}

// Ballistic expansion sqrt(sigma0^2 + (kT/m) t^2).
inline double tof_radius(double sigma0, double temperature, const Species& species, double t) {
  detail::require(t >= 0.0, "tof_radius: time must be >= 0");
  const double v2 = Constants::boltzmann_constant * temperature / species.mass;
  return std::sqrt(sigma0 * sigma0 + v2 * t * t);
}

}  // namespace cliptrap

#endif
