#ifndef CLIPTRAP_LEAST_SQUARES_HPP
#define CLIPTRAP_LEAST_SQUARES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cliptrap/errors.hpp"

// Levenberg-Marquardt on a residual vector r(p), minimizing |r|^2.
// Parameters are optimized in internal coordinates q:
//   linear: q = p / scale      log: q = ln p
// and box bounds (given on p) are enforced by projection.
namespace cliptrap {

enum class ParamTransform { linear, log };

struct ParamSpec {
  std::string name;
  double initial = 0.0;
  ParamTransform transform = ParamTransform::linear;
  double scale = 1.0;  // typical magnitude, linear transform only
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct LsqOptions {
  int max_iterations = 200;
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 3.0;
  double parameter_tol = 1e-9;
  double residual_tol = 1e-12;
  // Multiply the covariance by chi^2 / dof (for unweighted data).
  bool scale_covariance = false;
};

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd values;
  Eigen::VectorXd sigmas;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd correlation;
  double residual_norm = 0.0;  // |r|
  double chi2 = 0.0;           // |r|^2
  int dof = 0;
  int iterations = 0;
  bool converged = false;

  std::size_t index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw InputError("FitResult: no parameter named '" + name + "'");
  }
  double value(const std::string& name) const { return values[static_cast<Eigen::Index>(index(name))]; }
  double sigma(const std::string& name) const { return sigmas[static_cast<Eigen::Index>(index(name))]; }
  double correlation_of(const std::string& a, const std::string& b) const {
    return correlation(static_cast<Eigen::Index>(index(a)), static_cast<Eigen::Index>(index(b)));
  }
};

namespace detail {

inline double to_internal(const ParamSpec& s, double p) {
  return s.transform == ParamTransform::log ? std::log(p) : p / s.scale;
}

inline double to_natural(const ParamSpec& s, double q) {
  return s.transform == ParamTransform::log ? std::exp(q) : q * s.scale;
}

// dp/dq at q.
inline double natural_derivative(const ParamSpec& s, double q) {
  return s.transform == ParamTransform::log ? std::exp(q) : s.scale;
}

inline double project(const ParamSpec& s, double q) {
  const double p = std::clamp(to_natural(s, q), s.lower, s.upper);
  return to_internal(s, p);
}

// Inverse of a symmetric positive semi-definite matrix after equilibrating
// its diagonal; a zero diagonal entry gives infinite variance.
inline Eigen::MatrixXd equilibrated_inverse(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = a(i, i) > 0.0 ? 1.0 / std::sqrt(a(i, i)) : 0.0;
  const Eigen::MatrixXd scaled = d.asDiagonal() * a * d.asDiagonal();
  Eigen::MatrixXd inv = scaled.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
  inv = d.asDiagonal() * inv * d.asDiagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d[i] == 0.0) {
      inv.row(i).setZero();
      inv.col(i).setZero();
      inv(i, i) = std::numeric_limits<double>::infinity();
    }
  }
  return 0.5 * (inv + inv.transpose());
}

inline void fill_correlation(FitResult& f) {
  const Eigen::Index n = f.values.size();
  f.sigmas = f.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  f.correlation = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (a == b) continue;
      const double den = f.sigmas[a] * f.sigmas[b];
      f.correlation(a, b) = den > 0.0 && std::isfinite(den) ? std::clamp(f.covariance(a, b) / den, -1.0, 1.0) : 0.0;
    }
  }
}

}  // namespace detail

// Central-difference Jacobian of r with respect to x, step max(1e-6 |x|, 1e-12).
template <class Residuals>
Eigen::MatrixXd numeric_jacobian(Residuals&& r, const Eigen::VectorXd& x) {
  const Eigen::VectorXd r0 = r(x);
  Eigen::MatrixXd j(r0.size(), x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = std::max(1e-6 * std::abs(x[k]), 1e-12);
    xp[k] = x[k] + h;
    const Eigen::VectorXd up = r(xp);
    xp[k] = x[k] - h;
    const Eigen::VectorXd down = r(xp);
    xp[k] = x[k];
    j.col(k) = (up - down) / (2.0 * h);
  }
  return j;
}

// residuals(p) takes natural parameters and returns the (weighted) residual
// vector. Non-convergence within max_iterations returns the best point found
// with converged = false.
template <class Residuals>
FitResult least_squares(Residuals&& residuals, const std::vector<ParamSpec>& specs, const LsqOptions& opt = {}) {
  const Eigen::Index n = static_cast<Eigen::Index>(specs.size());
  detail::require(n > 0, "least_squares: no parameters");
  for (const ParamSpec& s : specs) {
    detail::require(s.initial >= s.lower && s.initial <= s.upper,
                    "least_squares: initial value of '" + s.name + "' outside its bounds");
    detail::require(s.transform != ParamTransform::log || s.initial > 0.0,
                    "least_squares: log-scaled parameter '" + s.name + "' must start > 0");
    detail::require(s.transform != ParamTransform::linear || s.scale > 0.0,
                    "least_squares: scale of '" + s.name + "' must be > 0");
  }

  auto natural = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = detail::to_natural(specs[static_cast<std::size_t>(i)], q[i]);
    return p;
  };
  auto r_of_q = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd { return residuals(natural(q)); };

  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = detail::to_internal(specs[static_cast<std::size_t>(i)], specs[static_cast<std::size_t>(i)].initial);
  Eigen::VectorXd r = r_of_q(q);
  detail::require(r.size() >= n, "least_squares: fewer residuals than parameters");
  if (!r.allFinite()) throw NumericalError("least_squares: model is not finite at the initial parameters");
  double cost = r.squaredNorm();

  FitResult out;
  double lambda = opt.initial_damping;
  Eigen::MatrixXd j = numeric_jacobian(r_of_q, q);
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    out.iterations = iter;
    if (cost == 0.0) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd a = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    Eigen::MatrixXd damped = a;
    for (Eigen::Index i = 0; i < n; ++i) damped(i, i) += lambda * std::max(a(i, i), 1e-300);
    const Eigen::VectorXd step = damped.ldlt().solve(-g);

    Eigen::VectorXd trial = q + step;
    for (Eigen::Index i = 0; i < n; ++i) trial[i] = detail::project(specs[static_cast<std::size_t>(i)], trial[i]);
    const double rel_step = (trial - q).norm() / std::max(q.norm(), 1e-300);
    const Eigen::VectorXd r_trial = r_of_q(trial);
    const double cost_trial = r_trial.allFinite() ? r_trial.squaredNorm() : std::numeric_limits<double>::infinity();

    if (cost_trial < cost) {
      const double rel_drop = (cost - cost_trial) / cost;
      q = trial;
      r = r_trial;
      cost = cost_trial;
      lambda /= opt.damping_decrease;
      if (rel_step < opt.parameter_tol || rel_drop < opt.residual_tol) {
        out.converged = true;
        break;
      }
      j = numeric_jacobian(r_of_q, q);
    } else {
      lambda *= opt.damping_increase;
      // No decrease even for a vanishing step: q is a minimum to working precision.
      if (rel_step < opt.parameter_tol || lambda > 1e20) {
        out.converged = true;
        break;
      }
    }
  }

  const Eigen::VectorXd p = natural(q);
  // Jacobian in natural parameters by the chain rule (delta method).
  Eigen::MatrixXd jp = numeric_jacobian(r_of_q, q);
  for (Eigen::Index i = 0; i < n; ++i) jp.col(i) /= detail::natural_derivative(specs[static_cast<std::size_t>(i)], q[i]);

  out.names.reserve(specs.size());
  for (const ParamSpec& s : specs) out.names.push_back(s.name);
  out.values = p;
  out.chi2 = cost;
  out.residual_norm = std::sqrt(cost);
  out.dof = static_cast<int>(r.size() - n);
  out.covariance = detail::equilibrated_inverse(jp.transpose() * jp);
  if (opt.scale_covariance && out.dof > 0) out.covariance *= cost / out.dof;
  detail::fill_correlation(out);
  return out;
}

}  // namespace cliptrap

#endif
