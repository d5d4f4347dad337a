#ifndef CLIPTRAP_SWEEPS_HPP
#define CLIPTRAP_SWEEPS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cliptrap/cloud.hpp"
#include "cliptrap/dataset.hpp"
#include "cliptrap/dynamics.hpp"
#include "cliptrap/errors.hpp"

namespace cliptrap {

enum class SweptParameter { radial_gradient, axial_curvature, offset_field };

enum class SweepOutput {
  n_mot,
  n_mt_steady,
  loading_rate,
  tau_eff,
  v_mt,
  kappa,
  kappa_abscissa,
  t_mt_prediction,
  majorana_safe,
};

inline IpTrapConfig with_swept_value(IpTrapConfig trap, SweptParameter p, double value) {
  switch (p) {
    case SweptParameter::radial_gradient: trap.radial_gradient = value; break;
    case SweptParameter::axial_curvature: trap.axial_curvature = value; break;
    case SweptParameter::offset_field: trap.offset_field = value; break;
  }
  return trap;
}

struct SweepSpec {
  SweptParameter parameter = SweptParameter::radial_gradient;
  std::vector<double> values;  // SI
  LoadingScenario base;        // v_mt and v_eff are recomputed per point
  std::vector<SweepOutput> outputs;
  std::vector<double> n_mot;   // empty, or one MOT atom number per value
  GeometryOptions geometry;

  void validate() const {
    detail::require(!values.empty(), "sweep: no values");
    detail::require(!outputs.empty(), "sweep: no outputs requested");
    for (double v : values) detail::require(std::isfinite(v), "sweep: non-finite swept value");
    if (values.size() > 1) {
      const bool up = values[1] > values[0];
      for (std::size_t i = 1; i < values.size(); ++i) {
        detail::require(up ? values[i] > values[i - 1] : values[i] < values[i - 1],
                        "sweep: values must be strictly monotone");
      }
    }
    if (parameter != SweptParameter::offset_field) {
      for (double v : values) detail::require(v > 0.0, "sweep: swept gradient or curvature must be > 0");
    }
    detail::require(n_mot.empty() || n_mot.size() == values.size(),
                    "sweep: per-point MOT atom numbers must match the number of values");
    for (double n : n_mot) detail::require(n >= 0.0 && std::isfinite(n), "sweep: MOT atom number must be >= 0");
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) detail::require(outputs[i] != outputs[j], "sweep: output requested twice");
    }
  }
};

// Everything a sweep can report, for one trap setting. Numeric fields are
// NaN when the point failed; error holds the reason.
struct SweepPoint {
  double value = 0.0;
  double n_mot = 0.0;
  double n_mt_steady = std::numeric_limits<double>::quiet_NaN();
  double loading_rate = std::numeric_limits<double>::quiet_NaN();
  double tau_eff = std::numeric_limits<double>::quiet_NaN();
  double v_mt = std::numeric_limits<double>::quiet_NaN();
  double v_eff = std::numeric_limits<double>::quiet_NaN();
  double gamma_ed = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double kappa_abscissa = std::numeric_limits<double>::quiet_NaN();
  double t_mt_prediction = std::numeric_limits<double>::quiet_NaN();
  bool majorana_safe = false;
  std::string error;

  bool ok() const { return error.empty(); }

  double get(SweepOutput o) const {
    switch (o) {
      case SweepOutput::n_mot: return n_mot;
      case SweepOutput::n_mt_steady: return n_mt_steady;
      case SweepOutput::loading_rate: return loading_rate;
      case SweepOutput::tau_eff: return tau_eff;
      case SweepOutput::v_mt: return v_mt;
      case SweepOutput::kappa: return kappa;
      case SweepOutput::kappa_abscissa: return kappa_abscissa;
      case SweepOutput::t_mt_prediction: return t_mt_prediction;
      case SweepOutput::majorana_safe: return majorana_safe ? 1.0 : 0.0;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

// Scenario whose v_mt and v_eff are already set. The temperature column is
// the thermalized prediction.
inline SweepPoint evaluate_scenario(const LoadingScenario& s) {
  s.validate();
  SweepPoint p;
  p.n_mot = s.mot.n_mot;
  p.v_mt = s.v_mt;
  p.v_eff = s.v_eff;
  p.loading_rate = loading_rate(s);
  p.gamma_ed = gamma_ed(s);
  p.n_mt_steady = steady_state(s);
  // tau = N/R is undefined without loading; report 0 atoms over 0 rate as NaN.
  p.tau_eff = p.loading_rate > 0.0 ? effective_loading_time(p.n_mt_steady, p.loading_rate)
                                   : std::numeric_limits<double>::quiet_NaN();
  if (s.mot.n_mot > 0.0) {
    p.kappa_abscissa = kappa_abscissa(s);
    p.kappa = accumulation_efficiency(s);
  }
  p.t_mt_prediction = mt_temperature_prediction(s.mot.temperature, true).axial;
  p.majorana_safe = majorana_safe(s.trap);
  return p;
}

struct SweepResult {
  SweptParameter parameter = SweptParameter::radial_gradient;
  std::vector<SweepOutput> outputs;
  std::vector<SweepPoint> points;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const SweepPoint& p) { return !p.ok(); }));
  }

  std::vector<double> column(SweepOutput o) const {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.get(o));
    return out;
  }
};

// One point per swept value, in order. Geometry (v_mt, v_eff) is rebuilt
// from the thermal cloud at base.mt_temperature; the MOT atom number is the
// base value or the per-point override.
inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult out;
  out.parameter = spec.parameter;
  out.outputs = spec.outputs;
  out.points.reserve(spec.values.size());
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    LoadingScenario s = spec.base;
    s.trap = with_swept_value(s.trap, spec.parameter, spec.values[i]);
    if (!spec.n_mot.empty()) s.mot.n_mot = spec.n_mot[i];
    SweepPoint p;
    try {
      p = evaluate_scenario(with_cloud_geometry(s, spec.geometry));
    } catch (const InputError& e) {
      p.error = e.what();
    } catch (const NumericalError& e) {
      p.error = e.what();
    }
    p.value = spec.values[i];
    p.n_mot = s.mot.n_mot;
    p.majorana_safe = majorana_safe(s.trap);
    out.points.push_back(std::move(p));
  }
  return out;
}

// Master-curve coordinates (R V_MT / N_MOT^2, kappa), one per scenario.
inline DataSet kappa_curve(const std::vector<LoadingScenario>& points) {
  detail::require(!points.empty(), "kappa_curve: no scenarios");
  DataSet d;
  d.x_label = "kappa_abscissa_m3_per_s";
  d.y_label = "kappa";
  for (const auto& s : points) d.add(kappa_abscissa(s), accumulation_efficiency(s), 1.0);
  return d;
}

enum class MeasurementKind { loading_curve, decay_curve, tof_series, kappa_points };

struct SynthOptions {
  std::size_t samples = 0;  // 0 selects the per-kind default
  double t_end = 0.0;       // s, 0 selects the per-kind default
  double n0 = -1.0;         // decay start; < 0 selects the steady state
  double sigma_floor = 1e-3;  // relative, keeps sigma > 0 at zero noise
};

namespace detail {

// y (1 + noise g) with g ~ N(0, 1); sigma = max(noise, floor) |y|, with
// zero entries given the floor relative to the largest |y|.
inline void apply_noise(DataSet& d, double noise, double floor, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  double ymax = 0.0;
  for (double y : d.y) ymax = std::max(ymax, std::abs(y));
  const double rel = std::max(noise, floor);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double g = gauss(rng);
    const double truth = d.y[i];
    d.y[i] = truth * (1.0 + noise * g);
    double s = rel * std::max(std::abs(truth), floor * ymax);
    if (!(s > 0.0)) s = 1.0;
    d.sigma[i] = s;
  }
}

}  // namespace detail

// Forward-model data for the estimation routines, deterministic per seed.
//   loading_curve: evolve from 0 over 10 s, 201 samples
//   decay_curve:   closed-form decay from the steady state, gamma_d and
//                  beta_dd only (MOT off), 50 samples over 100 s
//   tof_series:    MOT cloud (sigma_radial, temperature), 8 times 1-8 ms
//   kappa_points:  30 points, v_mt scaled to span x_c/10 .. 10 x_c with
//                  x_c = beta_ed^2 / (32 beta_dd)
inline DataSet synthesize_measurements(const LoadingScenario& s, MeasurementKind kind, double noise,
                                       std::uint64_t seed, const SynthOptions& opt = {}) {
  detail::require(noise >= 0.0 && std::isfinite(noise), "synthesize: noise must be >= 0");
  s.validate();
  std::mt19937_64 rng(seed);
  DataSet d;
  switch (kind) {
    case MeasurementKind::loading_curve: {
      const std::size_t n = opt.samples ? opt.samples : 201;
      const TimeSeries ts = evolve(s, 0.0, opt.t_end > 0.0 ? opt.t_end : 10.0, n);
      d.x_label = "t_s";
      d.y_label = "n_atoms";
      for (std::size_t i = 0; i < ts.t.size(); ++i) d.add(ts.t[i], ts.n[i]);
      break;
    }
    case MeasurementKind::decay_curve: {
      const std::size_t n = opt.samples ? opt.samples : 50;
      const double n0 = opt.n0 >= 0.0 ? opt.n0 : steady_state(s);
      d.x_label = "t_s";
      d.y_label = "n_atoms";
      for (double t : uniform_grid(opt.t_end > 0.0 ? opt.t_end : 100.0, n)) {
        d.add(t, decay(n0, s.coefficients.gamma_d, s.coefficients.beta_dd, s.v_mt, t));
      }
      break;
    }
    case MeasurementKind::tof_series: {
      const std::size_t n = opt.samples ? opt.samples : 8;
      detail::require(n >= 2, "synthesize: need at least 2 samples");
      const double t_end = opt.t_end > 0.0 ? opt.t_end : 8e-3;
      const double t0 = t_end / 8.0;
      d.x_label = "t_s";
      d.y_label = "sigma_m";
      for (std::size_t i = 0; i < n; ++i) {
        const double t = t0 + (t_end - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
        d.add(t, tof_radius(s.mot.sigma_radial, s.mot.temperature, s.species, t));
      }
      break;
    }
    case MeasurementKind::kappa_points: {
      const std::size_t n = opt.samples ? opt.samples : 30;
      detail::require(n >= 2, "synthesize: need at least 2 samples");
      const double bdd = s.coefficients.beta_dd;
      const double bed = s.coefficients.beta_ed;
      detail::require(bdd > 0.0 && bed > 0.0, "synthesize: kappa points need beta_dd > 0 and beta_ed > 0");
      const double r = loading_rate(s);
      detail::require(r > 0.0 && s.mot.n_mot > 0.0, "synthesize: kappa points need a loading MOT");
      const double xc = bed * bed / (32.0 * bdd);
      std::vector<LoadingScenario> points;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = xc * std::pow(10.0, -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1));
        LoadingScenario p = s;
        p.v_mt = x * s.mot.n_mot * s.mot.n_mot / r;
        p.v_eff = p.v_mt;
        points.push_back(p);
      }
      d = kappa_curve(points);
      break;
    }
  }
  detail::apply_noise(d, noise, opt.sigma_floor, rng);
  return d;
}

// Column-density image of the trapped cloud at steady state on a 41 x 41
// grid spanning -8..10 xi1 (gravity sag is downhill) and +-4 sigma_z.
inline ColumnImage synthesize_column_image(const LoadingScenario& s, double noise, std::uint64_t seed,
                                           std::size_t grid = 41, bool include_gravity = true,
                                           double sigma_floor = 1e-3) {
  detail::require(noise >= 0.0 && std::isfinite(noise), "synthesize: noise must be >= 0");
  detail::require(grid >= 3, "synthesize: image grid must be at least 3");
  s.validate();
  const double n = steady_state(s);
  detail::require(n > 0.0, "synthesize: the steady state holds no atoms");
  const ThermalCloud c = make_thermal_cloud(s.species, s.trap, n, s.mt_temperature, include_gravity);
  ColumnImage img;
  const double g = static_cast<double>(grid - 1);
  for (std::size_t i = 0; i < grid; ++i) {
    const double y = c.xi1 * (-8.0 + 18.0 * static_cast<double>(i) / g);
    for (std::size_t j = 0; j < grid; ++j) {
      const double z = c.sigma_z * (-4.0 + 8.0 * static_cast<double>(j) / g);
      img.add(y, z, column_density(c, y, z));
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double vmax = *std::max_element(img.value.begin(), img.value.end());
  const double rel = std::max(noise, sigma_floor);
  for (std::size_t k = 0; k < img.size(); ++k) {
    const double truth = img.value[k];
    img.value[k] = truth * (1.0 + noise * gauss(rng));
    img.sigma[k] = rel * std::max(truth, sigma_floor * vmax);
  }
  return img;
}

}  // namespace cliptrap

#endif
