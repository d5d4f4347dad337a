#ifndef CLIPTRAP_ODE_HPP
#define CLIPTRAP_ODE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "cliptrap/errors.hpp"

namespace cliptrap {

struct OdeOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-3;
  std::size_t max_steps_per_sample = 100000;
};

struct OdeSolution {
  std::vector<double> t;
  std::vector<double> y;
  std::size_t rhs_evaluations = 0;
};

// Integrates the scalar ODE y' = f(t, y) with Dormand-Prince 5(4) and dense
// output, sampling y at the given (increasing) times. times[0] is the
// initial time.
template <class Rhs>
OdeSolution integrate_scalar(Rhs&& f, double y0, const std::vector<double>& times, const OdeOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 1>;
  detail::require(times.size() >= 2, "integrate_scalar: need at least two sample times");
  for (std::size_t i = 1; i < times.size(); ++i) {
    detail::require(times[i] > times[i - 1], "integrate_scalar: sample times must increase strictly");
  }
  detail::require(opt.rel_tol > 0.0 && opt.abs_tol > 0.0, "integrate_scalar: tolerances must be > 0");

  OdeSolution sol;
  sol.t.reserve(times.size());
  sol.y.reserve(times.size());
  auto system = [&](const State& y, State& dydt, double t) {
    dydt[0] = f(t, y[0]);
    ++sol.rhs_evaluations;
  };
  auto observer = [&](const State& y, double t) {
    if (!std::isfinite(y[0])) {
      std::ostringstream msg;
      msg << "ODE integration produced a non-finite state at t = " << t;
      throw NumericalError(msg.str());
    }
    sol.t.push_back(t);
    sol.y.push_back(y[0]);
  };

  State y{y0};
  const double span = times.back() - times.front();
  const double dt0 = 1e-6 * span;
  auto stepper = odeint::make_dense_output(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<State>());
  try {
    odeint::integrate_times(stepper, system, y, times.begin(), times.end(), dt0, observer,
                            odeint::max_step_checker(static_cast<int>(opt.max_steps_per_sample)));
  } catch (const NumericalError&) {
    throw;
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << "ODE integration failed after " << sol.rhs_evaluations << " right-hand-side evaluations";
    if (!sol.t.empty()) msg << ", last sample t = " << sol.t.back();
    msg << ", current step " << stepper.current_time_step() << ": " << e.what();
    throw NumericalError(msg.str());
  }
  return sol;
}

}  // namespace cliptrap

#endif
