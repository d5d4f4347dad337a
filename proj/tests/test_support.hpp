#ifndef CLIPTRAP_TEST_SUPPORT_HPP
#define CLIPTRAP_TEST_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "cliptrap/cloud.hpp"
#include "cliptrap/constants.hpp"
#include "cliptrap/dynamics.hpp"
#include "cliptrap/species.hpp"
#include "cliptrap/trap.hpp"

namespace cliptrap::testing {

inline double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Optimum operating point: B' = 12.5 G/cm, B'' = 10.5 G/cm^2, B0 = 0.
inline IpTrapConfig optimum_trap() {
  IpTrapConfig cfg;
  cfg.radial_gradient = gauss_per_cm_to_si(12.5);
  cfg.axial_curvature = gauss_per_cm2_to_si(10.5);
  cfg.offset_field = 0.0;
  cfg.background_loss_rate = 0.0;
  return cfg;
}

// Optimum scenario with saturated MOT of 5e6 atoms at 140 uK and the
// fitted chromium coefficients. V_MT is supplied, V_eff = V_MT.
inline LoadingScenario optimum_scenario(double v_mt = 5.4e-9) {
  LoadingScenario s;
  s.species = chromium_52();
  s.trap = optimum_trap();
  s.coefficients = chromium_rate_coefficients();
  s.mot.n_mot = 5e6;
  s.mot.temperature = 140e-6;
  s.mot.sigma_radial = 1e-4;
  s.mot.sigma_axial = 1e-4;
  s.mt_temperature = 100e-6;
  s.v_mt = v_mt;
  s.v_eff = v_mt;
  return s;
}

}  // namespace cliptrap::testing

#endif
