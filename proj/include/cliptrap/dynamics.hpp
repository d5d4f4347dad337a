#ifndef CLIPTRAP_DYNAMICS_HPP
#define CLIPTRAP_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cliptrap/cloud.hpp"
#include "cliptrap/errors.hpp"
#include "cliptrap/ode.hpp"
#include "cliptrap/species.hpp"
#include "cliptrap/trap.hpp"

// Zero-dimensional rate model for the magnetic-trap atom number
//   dN/dt = R - (gamma_d + gamma_ed) N - 2 beta_dd N^2 / V_MT.
// The factor 2 counts both atoms lost per inelastic MT-MT collision, so
// beta_dd here is the per-pair event rate coefficient.
namespace cliptrap {

struct RateCoefficients {
  double eta = 0.3;      // transfer efficiency into trappable states
  double beta_ed = 0.0;  // m^3/s, excited MOT atom + trapped atom
  double beta_dd = 0.0;  // m^3/s, trapped atom + trapped atom
  double gamma_d = 0.0;  // 1/s, background gas

  void validate() const {
    detail::require(eta >= 0.0 && eta <= 1.0, "coefficients: eta must lie in [0, 1]");
    detail::require(beta_ed >= 0.0, "coefficients: beta_ed must be >= 0");
    detail::require(beta_dd >= 0.0, "coefficients: beta_dd must be >= 0");
    detail::require(gamma_d >= 0.0, "coefficients: gamma_d must be >= 0");
  }
};

// beta_dd = 1.3e-11 cm^3/s, beta_ed = 6e-10 cm^3/s, eta = 0.3.
inline RateCoefficients chromium_rate_coefficients() { return {0.3, 6e-16, 1.3e-17, 0.0}; }

struct LoadingScenario {
  Species species;
  IpTrapConfig trap;
  RateCoefficients coefficients;
  MotBeamParams mot;
  double mt_temperature = 0.0;  // K
  double v_mt = 0.0;            // m^3
  double v_eff = 0.0;           // m^3

  void validate() const {
    trap.validate();
    coefficients.validate();
    mot.validate();
    detail::require(v_mt > 0.0, "scenario: v_mt must be > 0");
    detail::require(v_eff > 0.0, "scenario: v_eff must be > 0");
  }
};

struct GeometryOptions {
  bool include_gravity = true;
  EffectiveVolumeMode v_eff_mode = EffectiveVolumeMode::approximate;
};

// Fills v_mt (and v_eff) from the thermal cloud at mt_temperature.
inline LoadingScenario with_cloud_geometry(LoadingScenario s, const GeometryOptions& opt = {}) {
  s.trap.validate();
  s.mot.validate();
  detail::require(s.mt_temperature > 0.0, "scenario: mt_temperature must be > 0");
  const ThermalCloud mt = make_thermal_cloud(s.species, s.trap, 1.0, s.mt_temperature, opt.include_gravity);
  s.v_mt = occupied_volume(mt);
  const GaussianCloud mot{std::max(s.mot.n_mot, 1.0), s.mot.temperature, s.mot.sigma_radial, s.mot.sigma_axial};
  s.v_eff = opt.v_eff_mode == EffectiveVolumeMode::approximate ? s.v_mt
                                                                : effective_volume(mot, mt, opt.v_eff_mode);
  return s;
}

// N*_MOT, the excited-state population feeding the leak.
inline double excited_mot_atoms(const LoadingScenario& s) { return excited_fraction(s.mot, s.species) * s.mot.n_mot; }

inline double loading_rate(const LoadingScenario& s) {
  return s.coefficients.eta * excited_mot_atoms(s) * s.species.gamma_ed;
}

inline double gamma_ed(double n_star, double beta_ed, double v_eff) {
  detail::require(v_eff > 0.0, "gamma_ed: v_eff must be > 0");
  return n_star * beta_ed / v_eff;
}

inline double gamma_ed(const LoadingScenario& s) {
  return gamma_ed(excited_mot_atoms(s), s.coefficients.beta_ed, s.v_eff);
}

inline double total_one_body_loss(const LoadingScenario& s) { return s.coefficients.gamma_d + gamma_ed(s); }

struct RateEquation {
  double rate = 0.0;     // R, atoms/s
  double gamma = 0.0;    // one-body loss, 1/s
  double beta_dd = 0.0;  // m^3/s
  double volume = 0.0;   // m^3

  double operator()(double n) const { return rate - gamma * n - 2.0 * beta_dd * n * n / volume; }
};

inline RateEquation rate_equation(const LoadingScenario& s) {
  return {loading_rate(s), total_one_body_loss(s), s.coefficients.beta_dd, s.v_mt};
}

// Positive root of R - gamma N - 2 beta N^2 / V = 0, evaluated as
// 2 R V / (gamma V + sqrt((gamma V)^2 + 8 beta R V)). Below the switch the
// two-term series is used.
inline constexpr double steady_state_series_switch = 1e-8;

inline double steady_state(const RateEquation& eq) {
  const double r = eq.rate;
  const double g = eq.gamma;
  const double b = eq.beta_dd;
  const double v = eq.volume;
  detail::require(r >= 0.0 && g >= 0.0 && b >= 0.0, "steady_state: rate, loss and beta_dd must be >= 0");
  detail::require(v > 0.0, "steady_state: volume must be > 0");
  if (r == 0.0) return 0.0;
  detail::require(b > 0.0 || g > 0.0, "steady_state: no loss channel, the atom number grows without bound");
  const double gv = g * v;
  const double disc = 8.0 * b * r * v;
  if (disc < steady_state_series_switch * gv * gv) return r / g - 2.0 * b * r * r / (v * g * g * g);
  return 2.0 * r * v / (gv + std::sqrt(gv * gv + disc));
}

inline double steady_state(const LoadingScenario& s) { return steady_state(rate_equation(s)); }

// kappa = N_MT / N_MOT at steady state for gamma_d = 0, N* = N_MOT/2 and
// V_eff = V_MT, as a function of x = R V_MT / N_MOT^2:
//   kappa = [-beta_ed + sqrt(beta_ed^2 + 32 beta_dd x)] / (8 beta_dd)
//         = 4 x / (beta_ed + sqrt(beta_ed^2 + 32 beta_dd x)).
inline double accumulation_efficiency(double x, double beta_dd, double beta_ed) {
  detail::require(x >= 0.0, "accumulation_efficiency: abscissa must be >= 0");
  detail::require(beta_dd >= 0.0 && beta_ed >= 0.0, "accumulation_efficiency: beta coefficients must be >= 0");
  if (x == 0.0) return 0.0;
  detail::require(beta_dd > 0.0 || beta_ed > 0.0, "accumulation_efficiency: no loss channel");
  return 4.0 * x / (beta_ed + std::sqrt(beta_ed * beta_ed + 32.0 * beta_dd * x));
}

inline double kappa_abscissa(const LoadingScenario& s) {
  detail::require(s.mot.n_mot > 0.0, "kappa_abscissa: MOT atom number must be > 0");
  return loading_rate(s) * s.v_mt / (s.mot.n_mot * s.mot.n_mot);
}

inline double accumulation_efficiency(const LoadingScenario& s) {
  return accumulation_efficiency(kappa_abscissa(s), s.coefficients.beta_dd, s.coefficients.beta_ed);
}

inline double effective_loading_time(double n_mt, double r) {
  detail::require(r > 0.0, "effective_loading_time: loading rate must be > 0");
  detail::require(n_mt >= 0.0, "effective_loading_time: atom number must be >= 0");
  return n_mt / r;
}

// N(t) for dN/dt = -gamma N - 2 beta N^2 / V:
//   n0 e^{-gamma t} / (1 + (2 beta n0 / V) (1 - e^{-gamma t}) / gamma).
// For gamma t < 1e-8 the bracket is expanded, which reduces to the pure
// two-body n0 / (1 + 2 beta n0 t / V) at gamma = 0.
inline double decay(double n0, double gamma, double beta, double v, double t) {
  detail::require(n0 >= 0.0 && t >= 0.0, "decay: n0 and t must be >= 0");
  detail::require(gamma >= 0.0 && beta >= 0.0, "decay: gamma and beta must be >= 0");
  detail::require(v > 0.0, "decay: volume must be > 0");
  const double k = 2.0 * beta * n0 / v;
  const double gt = gamma * t;
  const double t_eff = gt < 1e-8 ? t * (1.0 - 0.5 * gt) : -std::expm1(-gt) / gamma;
  return n0 * std::exp(-gt) / (1.0 + k * t_eff);
}

struct TimeSeries {
  std::vector<double> t;
  std::vector<double> n;
};

inline std::vector<double> uniform_grid(double t_end, std::size_t samples) {
  detail::require(t_end > 0.0, "time grid: t_end must be > 0");
  detail::require(samples >= 2, "time grid: need at least 2 samples");
  std::vector<double> t(samples);
  for (std::size_t i = 0; i < samples; ++i) t[i] = t_end * static_cast<double>(i) / static_cast<double>(samples - 1);
  t.back() = t_end;
  return t;
}

inline TimeSeries evolve(const RateEquation& eq, double n0, const std::vector<double>& times,
                         const OdeOptions& opt = {}) {
  detail::require(n0 >= 0.0, "evolve: n0 must be >= 0");
  detail::require(eq.volume > 0.0, "evolve: volume must be > 0");
  const OdeSolution sol = integrate_scalar([&](double, double n) { return eq(std::max(n, 0.0)); }, n0, times, opt);
  TimeSeries ts{sol.t, sol.y};
  for (double& n : ts.n) n = std::max(n, 0.0);
  return ts;
}

inline TimeSeries evolve(const LoadingScenario& s, double n0, double t_end, std::size_t samples,
                         const OdeOptions& opt = {}) {
  s.validate();
  return evolve(rate_equation(s), n0, uniform_grid(t_end, samples), opt);
}

// Virial estimate after transfer from a MOT at t_mot: the linear radial
// potential takes 1/3 and the harmonic axis 1/2 of the kinetic temperature.
// Full thermalization of (3/2) k T_MOT over (3/2 + 2 + 1/2) k T gives 3/8.
struct MtTemperaturePrediction {
  double axial = 0.0;
  double radial = 0.0;
};

inline MtTemperaturePrediction mt_temperature_prediction(double t_mot, bool thermalized) {
  detail::require(t_mot > 0.0, "mt_temperature_prediction: MOT temperature must be > 0");
  if (thermalized) return {0.375 * t_mot, 0.375 * t_mot};
  return {t_mot / 2.0, t_mot / 3.0};
}

}  // namespace cliptrap

#endif
