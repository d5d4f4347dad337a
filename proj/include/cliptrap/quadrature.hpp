#ifndef CLIPTRAP_QUADRATURE_HPP
#define CLIPTRAP_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cliptrap/errors.hpp"

// Adaptive Gauss-Kronrod quadrature over finite boxes, nested per axis.
// Each axis is described by a sorted list of breakpoints: the first and last
// entries are the integration limits, interior entries are points where the
// integrand has a kink or a narrow feature.
namespace cliptrap::quad {

inline constexpr double default_rel_tol = 1e-8;
inline constexpr std::size_t default_max_intervals = 4000;
inline constexpr double absolute_floor = 1e-280;

struct Result {
  double value = 0.0;
  double abs_error = 0.0;

  double rel_error() const { return value != 0.0 ? abs_error / std::abs(value) : abs_error; }
};

using Breaks = std::vector<double>;

// Sorts, removes duplicates, and drops interior points outside [lo, hi].
inline Breaks make_breaks(double lo, double hi, std::vector<double> interior = {}) {
  Breaks b{lo};
  std::sort(interior.begin(), interior.end());
  for (double p : interior) {
    if (p > b.back() && p < hi) b.push_back(p);
  }
  b.push_back(hi);
  return b;
}

// Globally adaptive: the interval with the largest error estimate is bisected
// until the total error is below rel_tol |value|. Integrals below
// absolute_floor count as converged, which keeps far-tail slices of nested
// integrals (values near underflow) from exhausting the budget.
template <class F>
Result integrate_1d(F&& f, const Breaks& breaks, double rel_tol = default_rel_tol,
                    std::size_t max_intervals = default_max_intervals) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  auto eval = [&](double a, double b) {
    double err = 0.0;
    const double v = Rule::integrate(f, a, b, 0, 0.0, &err);
    // Boost reports the single-pass error on the reference interval [-1, 1].
    return Piece{a, b, v, err * 0.5 * (b - a)};
  };

  std::priority_queue<Piece> heap;
  Result r;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i] < breaks[i + 1])) continue;
    const Piece p = eval(breaks[i], breaks[i + 1]);
    r.value += p.value;
    r.abs_error += p.error;
    heap.push(p);
  }
  auto done = [&] { return r.abs_error <= std::max(rel_tol * std::abs(r.value), absolute_floor); };
  while (!done() && heap.size() < max_intervals) {
    const Piece worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    const Piece left = eval(worst.a, mid);
    const Piece right = eval(mid, worst.b);
    r.value += left.value + right.value - worst.value;
    r.abs_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Recompute the sums to shed the drift from running updates.
  if (!heap.empty()) {
    double v = 0.0, e = 0.0;
    for (auto h = heap; !h.empty(); h.pop()) {
      v += h.top().value;
      e += h.top().error;
    }
    r.value = v;
    r.abs_error = e;
  }
  if (!std::isfinite(r.value)) throw NumericalError("adaptive quadrature: integrand is not finite");
  if (!done() && r.abs_error > 10.0 * rel_tol * std::abs(r.value)) {
    std::ostringstream msg;
    msg << "adaptive quadrature did not converge: achieved relative error " << r.rel_error() << ", requested "
        << rel_tol << " (" << heap.size() << " intervals)";
    throw NumericalError(msg.str());
  }
  return r;
}

// f(x, y); x innermost.
template <class F>
Result integrate_2d(F&& f, const Breaks& xb, const Breaks& yb, double rel_tol = default_rel_tol) {
  double inner_err = 0.0;
  auto outer = [&](double y) {
    const Result in = integrate_1d([&](double x) { return f(x, y); }, xb, 0.1 * rel_tol);
    inner_err = std::max(inner_err, in.rel_error());
    return in.value;
  };
  Result r = integrate_1d(outer, yb, rel_tol);
  r.abs_error += inner_err * std::abs(r.value);
  return r;
}

// f(x, y, z); x innermost.
template <class F>
Result integrate_3d(F&& f, const Breaks& xb, const Breaks& yb, const Breaks& zb,
                    double rel_tol = default_rel_tol) {
  double inner_err = 0.0;
  auto outer = [&](double z) {
    const Result in = integrate_2d([&](double x, double y) { return f(x, y, z); }, xb, yb, 0.1 * rel_tol);
    inner_err = std::max(inner_err, in.rel_error());
    return in.value;
  };
  Result r = integrate_1d(outer, zb, rel_tol);
  r.abs_error += inner_err * std::abs(r.value);
  return r;
}

}  // namespace cliptrap::quad

#endif
