#include "susbench/special_fn.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "susbench/error.hpp"

namespace susbench {

namespace {

constexpr double kSqrt2Pi = 2.50662827463100050242;
constexpr double kEulerGamma = 0.57721566490153286061;

// Acklam's rational approximation, relative error ~1.2e-9.
double phi_inv_initial(double p) {
  constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
  constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
  constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double k0_series(double z) {
  const double y = 0.25 * z * z;
  double term = 1.0;
  double harmonic = 0.0;
  double i0 = 1.0;
  double tail = 0.0;
  for (int k = 1; k < 60; ++k) {
    term *= y / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    i0 += term;
    tail += term * harmonic;
    if (term * harmonic < 1e-17 * tail) break;
  }
  return -(std::log(0.5 * z) + kEulerGamma) * i0 + tail;
}

// Steed's method for the second continued fraction (Temme), order zero.
double k0_continued_fraction(double z) {
  double b = 2.0 * (1.0 + z);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i < 100000; ++i) {
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
    if (std::abs(dels / s) < 1e-17) break;
  }
  return std::sqrt(kPi / (2.0 * z)) * std::exp(-z) / s;
}

}  // namespace

double phi_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double phi_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double phi_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::domain, "phi_inv: p must lie in (0, 1)");
  double x = phi_inv_initial(p);
  // Halley refinement against the erfc-based CDF; work in the smaller tail.
  const double e = p < 0.5 ? phi_cdf(x) - p : (1.0 - p) - phi_cdf(-x);
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double bessel_k0(double z) {
  if (!(z > 0.0)) throw Error(Errc::domain, "bessel_k0: z must be positive");
  if (z <= 2.0) return k0_series(z);
  return k0_continued_fraction(z);
}

double mills_tail_equiv(double beta) {
  if (!(beta > 0.0)) throw Error(Errc::domain, "mills_tail_equiv: beta must be positive");
  return kSqrt2 * phi_cdf(-beta);
}

double product_k0_formula(double beta) {
  if (!(beta > 0.0)) throw Error(Errc::domain, "product_k0_formula: beta must be positive");
  return bessel_k0(0.5 * beta * beta) / kPi;
}

}  // namespace susbench
