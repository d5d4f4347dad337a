#ifndef CLIPTRAP_ESTIMATION_HPP
#define CLIPTRAP_ESTIMATION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cliptrap/cloud.hpp"
#include "cliptrap/dataset.hpp"
#include "cliptrap/dynamics.hpp"
#include "cliptrap/errors.hpp"
#include "cliptrap/least_squares.hpp"

namespace cliptrap {

namespace detail {

// Weighted linear least squares y ~ X c with per-row sigma; covariance is
// (X^T W X)^-1, optionally scaled by chi^2 / dof.
inline FitResult linear_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& sigma,
                            std::vector<std::string> names, bool scale_covariance) {
  const Eigen::VectorXd w = sigma.cwiseInverse();
  const Eigen::MatrixXd xw = w.asDiagonal() * x;
  const Eigen::VectorXd yw = w.cwiseProduct(y);
  const Eigen::VectorXd c = xw.colPivHouseholderQr().solve(yw);
  const Eigen::VectorXd r = xw * c - yw;

  FitResult out;
  out.names = std::move(names);
  out.values = c;
  out.chi2 = r.squaredNorm();
  out.residual_norm = r.norm();
  out.dof = static_cast<int>(x.rows() - x.cols());
  out.covariance = equilibrated_inverse(xw.transpose() * xw);
  if (scale_covariance && out.dof > 0) out.covariance *= out.chi2 / out.dof;
  out.iterations = 0;
  out.converged = true;
  fill_correlation(out);
  return out;
}

}  // namespace detail

inline constexpr double default_loading_window = 0.25;  // s

// Unweighted straight line N = N_0 + R t over t in [0, window]; parameters
// "loading_rate" and "intercept".
inline FitResult fit_loading_rate(const DataSet& series, double window = default_loading_window) {
  detail::require(window > 0.0, "fit_loading_rate: window must be > 0");
  series.validate(0, "fit_loading_rate");
  std::vector<double> t;
  std::vector<double> n;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.x[i] >= 0.0 && series.x[i] <= window) {
      t.push_back(series.x[i]);
      n.push_back(series.y[i]);
    }
  }
  if (t.size() < 3) {
    throw InputError("fit_loading_rate: need at least 3 data rows inside the " + std::to_string(window) +
                     " s window, got " + std::to_string(t.size()));
  }
  const Eigen::Index m = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd x(m, 2);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    x(i, 0) = t[static_cast<std::size_t>(i)];
    x(i, 1) = 1.0;
    y[i] = n[static_cast<std::size_t>(i)];
  }
  return detail::linear_fit(x, y, Eigen::VectorXd::Ones(m), {"loading_rate", "intercept"}, true);
}

struct KappaFitOptions {
  double beta_dd_initial = 1e-17;  // m^3/s
  double beta_ed_initial = 1e-15;  // m^3/s
  double beta_floor = 1e-35;       // lower bound keeping the log transform finite
  LsqOptions lsq{};
};

// Fits kappa(x; beta_dd, beta_ed) to (x = R V_MT / N_MOT^2, kappa) data,
// weighted by sigma, both coefficients in log space.
inline FitResult fit_kappa(const DataSet& data, const KappaFitOptions& opt = {}) {
  data.validate(3, "fit_kappa");
  for (double x : data.x) detail::require(x > 0.0, "fit_kappa: abscissa must be > 0");
  detail::require(opt.beta_dd_initial > 0.0 && opt.beta_ed_initial > 0.0, "fit_kappa: initial guesses must be > 0");
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = (data.y[i] - accumulation_efficiency(data.x[i], p[0], p[1])) / data.sigma[i];
    }
    return r;
  };
  const std::vector<ParamSpec> specs{
      {"beta_dd", opt.beta_dd_initial, ParamTransform::log, 1.0, opt.beta_floor, 1.0},
      {"beta_ed", opt.beta_ed_initial, ParamTransform::log, 1.0, opt.beta_floor, 1.0},
  };
  return least_squares(residuals, specs, opt.lsq);
}

struct DecayFitOptions {
  std::optional<double> n0_initial;
  std::optional<double> gamma_initial;
  std::optional<double> beta_initial;
  double beta_floor = 1e-35;
  LsqOptions lsq{};
};

// Fits decay(n0, gamma, beta_dd, v, t) to (t, N) data; parameters "n0",
// "gamma" (>= 0) and "beta_dd" (log space).
inline FitResult fit_decay(const DataSet& series, double v, const DecayFitOptions& opt = {}) {
  series.validate(4, "fit_decay");
  detail::require(v > 0.0, "fit_decay: volume must be > 0");
  for (std::size_t i = 0; i < series.size(); ++i) {
    detail::require(series.x[i] >= 0.0, "fit_decay: times must be >= 0");
    detail::require(series.y[i] > 0.0, "fit_decay: atom numbers must be > 0");
  }

  // Initial guesses from a straight line through ln N: half of the apparent
  // loss rate to each channel.
  const Eigen::Index m = static_cast<Eigen::Index>(series.size());
  Eigen::MatrixXd x(m, 2);
  Eigen::VectorXd ly(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    x(i, 0) = series.x[static_cast<std::size_t>(i)];
    x(i, 1) = 1.0;
    ly[i] = std::log(series.y[static_cast<std::size_t>(i)]);
  }
  const Eigen::VectorXd line = x.colPivHouseholderQr().solve(ly);
  const double n0_guess = opt.n0_initial.value_or(std::exp(line[1]));
  const double rate = std::max(-line[0], 1e-12);
  detail::require(-line[0] > 0.0 || opt.gamma_initial, "fit_decay: atom number does not decrease overall");
  const double gamma_guess = opt.gamma_initial.value_or(0.5 * rate);
  const double beta_guess = opt.beta_initial.value_or(std::max(0.5 * rate * v / (2.0 * n0_guess), 2.0 * opt.beta_floor));

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m);
    for (std::size_t i = 0; i < series.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = (series.y[i] - decay(p[0], p[1], p[2], v, series.x[i])) / series.sigma[i];
    }
    return r;
  };
  const std::vector<ParamSpec> specs{
      {"n0", n0_guess, ParamTransform::linear, n0_guess, 0.0, std::numeric_limits<double>::infinity()},
      {"gamma", gamma_guess, ParamTransform::linear, std::max(gamma_guess, 1e-12), 0.0,
       std::numeric_limits<double>::infinity()},
      {"beta_dd", beta_guess, ParamTransform::log, 1.0, opt.beta_floor, 1.0},
  };
  return least_squares(residuals, specs, opt.lsq);
}

struct TofFit {
  FitResult fit;              // "sigma0" (m), "temperature" (K)
  double sigma0_squared = 0;  // m^2, fitted intercept
  bool degenerate = false;    // sigma0^2 < 0, sigma0 reported as NaN
};

// sigma^2(t) = sigma0^2 + (k T / m) t^2, solved as a weighted linear fit in
// t^2 with sigma(sigma^2) = 2 sigma sigma_sigma.
inline TofFit fit_tof(const DataSet& series, const Species& species) {
  series.validate(2, "fit_tof");
  const Eigen::Index m = static_cast<Eigen::Index>(series.size());
  Eigen::MatrixXd x(m, 2);
  Eigen::VectorXd y(m);
  Eigen::VectorXd s(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    detail::require(series.y[k] > 0.0, "fit_tof: cloud sizes must be > 0");
    x(i, 0) = 1.0;
    x(i, 1) = series.x[k] * series.x[k];
    y[i] = series.y[k] * series.y[k];
    s[i] = 2.0 * series.y[k] * series.sigma[k];
  }
  const FitResult lin = detail::linear_fit(x, y, s, {"sigma0_squared", "slope"}, false);
  const double a = lin.values[0];
  const double b = lin.values[1];
  const double mk = species.mass / Constants::boltzmann_constant;

  TofFit out;
  out.sigma0_squared = a;
  out.degenerate = !(a >= 0.0);
  const double sigma0 = out.degenerate ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(a);
  // Delta method from (a, b) to (sqrt(a), b m / k).
  Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
  d(0, 0) = sigma0 > 0.0 ? 0.5 / sigma0 : std::numeric_limits<double>::quiet_NaN();
  d(1, 1) = mk;
  out.fit = lin;
  out.fit.names = {"sigma0", "temperature"};
  out.fit.values = Eigen::Vector2d(sigma0, b * mk);
  out.fit.covariance = d * lin.covariance * d.transpose();
  detail::fill_correlation(out.fit);
  return out;
}

struct ProfileFitOptions {
  bool include_gravity = true;
  std::optional<double> temperature_initial;
  LsqOptions lsq{};
};

// Fits column_density(n0, T, center) to an image; xi1, xi2 and sigma_z all
// follow from T given the species and trap. Parameters "n0" (1/m^3),
// "temperature" (K), "center_y" and "center_z" (m).
inline FitResult fit_column_profile(const ColumnImage& image, const Species& species, const IpTrapConfig& trap,
                                    const ProfileFitOptions& opt = {}) {
  const std::size_t m = image.size();
  detail::require(image.y.size() == m && image.z.size() == m && image.sigma.size() == m,
                  "fit_column_profile: column lengths differ");
  if (m < 5) throw InputError("fit_column_profile: need at least 5 pixels, got " + std::to_string(m));
  for (std::size_t i = 0; i < m; ++i) {
    detail::require(image.sigma[i] > 0.0, "fit_column_profile: sigma must be > 0");
  }

  // Moments of the positive part of the image.
  double w = 0.0, my = 0.0, mz = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = std::max(image.value[i], 0.0);
    w += v;
    my += v * image.y[i];
    mz += v * image.z[i];
  }
  detail::require(w > 0.0, "fit_column_profile: image has no positive signal");
  my /= w;
  mz /= w;
  double vz = 0.0;
  for (std::size_t i = 0; i < m; ++i) vz += std::max(image.value[i], 0.0) * (image.z[i] - mz) * (image.z[i] - mz);
  vz /= w;
  const double t_guess = opt.temperature_initial.value_or(
      std::max(species.magnetic_moment * trap.axial_curvature * vz / Constants::boltzmann_constant, 1e-9));

  // Centered model at the guess: its first moment in y is the sag offset,
  // its peak fixes the n0 scale.
  const ThermalCloud c0 = thermal_cloud_shape(species, trap, t_guess, opt.include_gravity);
  double w0 = 0.0, my0 = 0.0, peak_model = 0.0, peak_data = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = column_density(c0, image.y[i] - my, image.z[i] - mz);
    w0 += v;
    my0 += v * (image.y[i] - my);
    peak_model = std::max(peak_model, v);
    peak_data = std::max(peak_data, image.value[i]);
  }
  const double cy_guess = my - (w0 > 0.0 ? my0 / w0 : 0.0);
  const double n0_guess = peak_data / peak_model;

  auto residuals = [&](const Eigen::VectorXd& p) {
    ThermalCloud c = thermal_cloud_shape(species, trap, p[1], opt.include_gravity);
    c.peak_density = p[0];
    Eigen::VectorXd r(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      r[static_cast<Eigen::Index>(i)] =
          (image.value[i] - column_density(c, image.y[i] - p[2], image.z[i] - p[3])) / image.sigma[i];
    }
    return r;
  };
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<ParamSpec> specs{
      {"n0", n0_guess, ParamTransform::linear, n0_guess, 0.0, inf},
      {"temperature", t_guess, ParamTransform::log, 1.0, 1e-12, inf},
      {"center_y", cy_guess, ParamTransform::linear, c0.xi1, -inf, inf},
      {"center_z", mz, ParamTransform::linear, c0.sigma_z, -inf, inf},
  };
  return least_squares(residuals, specs, opt.lsq);
}

}  // namespace cliptrap

#endif
