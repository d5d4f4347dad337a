#ifndef CLIPTRAP_BESSEL_HPP
#define CLIPTRAP_BESSEL_HPP

#include <cmath>
#include <limits>

#include "cliptrap/constants.hpp"
#include "cliptrap/errors.hpp"

namespace cliptrap {

namespace detail {

inline constexpr double euler_gamma = 0.57721566490153286061;

// Ascending series
//   K1(x) = 1/x + ln(x/2) I1(x) - (x/4) sum_k [psi(k+1) + psi(k+2)] (x^2/4)^k / (k! (k+1)!)
// All terms are positive past k = 0, so the only cancellation is between
// the three pieces, which stays mild for x <= 2.
inline double bessel_k1_series(double x) {
  const double y = 0.25 * x * x;
  double term = 1.0;
  double psi_a = -euler_gamma;        // psi(k+1)
  double psi_b = 1.0 - euler_gamma;   // psi(k+2)
  double sum_i = 0.0;
  double sum_k = 0.0;
  for (int k = 0; k < 200; ++k) {
    sum_i += term;
    sum_k += term * (psi_a + psi_b);
    psi_a += 1.0 / (k + 1);
    psi_b += 1.0 / (k + 2);
    term *= y / ((k + 1.0) * (k + 2.0));
    if (term < 1e-17 * sum_i) break;
  }
  const double i1 = 0.5 * x * sum_i;
  return 1.0 / x + i1 * std::log(0.5 * x) - 0.25 * x * sum_k;
}

// Steed's continued fraction (Temme's CF2) for K0 and K1 at x >= 2.
inline double bessel_k1_continued_fraction(double x) {
  constexpr double eps = 1e-16;
  const double a1 = 0.25;  // 1/4 - mu^2, mu = 0
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i < 10000; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) break;
  }
  h *= a1;
  const double k0 = std::sqrt(pi / (2.0 * x)) * std::exp(-x) / s;
  return k0 * (x + 0.5 - h) / x;
}

}  // namespace detail

// Modified Bessel function of the second kind, order one.
// Series below x = 2, continued fraction above; both reach ~1e-16 relative
// at the crossover. Underflows smoothly to 0 past x ~ 705.
inline double bessel_k1(double x) {
  detail::require(x > 0.0, "bessel_k1: argument must be > 0");
  if (std::isinf(x)) return 0.0;
  if (x <= 2.0) return detail::bessel_k1_series(x);
  return detail::bessel_k1_continued_fraction(x);
}

// x K1(x), continuous at x = 0 where it equals 1.
inline double x_bessel_k1(double x) {
  if (x == 0.0) return 1.0;
  return x * bessel_k1(x);
}

}  // namespace cliptrap

#endif
