#pragma once

// Test-only reference computations, independent of the library code paths.

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

// K0(z) = int_0^inf exp(-z cosh t) dt, truncated where the integrand is
// below exp(-745) relative to its peak.
inline double k0_quadrature(double z) {
  const double upper = std::acosh(1.0 + 745.0 / z);
  auto f = [z](double t) { return std::exp(-z * (std::cosh(t) - 1.0)); };
  double sum = 0.0;
  const int pieces = 16;
  for (int i = 0; i < pieces; ++i) {
    const double a = upper * i / pieces;
    const double b = upper * (i + 1) / pieces;
    sum += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-15);
  }
  return sum * std::exp(-z);
}

// Normal CDF through long double erfc.
inline double phi(double x) {
  return static_cast<double>(0.5L * std::erfc(-static_cast<long double>(x) / std::sqrt(2.0L)));
}

// k-th smallest value (1-based) by full sort.
inline double kth_smallest(std::vector<double> v, std::size_t k) {
  std::sort(v.begin(), v.end());
  return v[k - 1];
}

}  // namespace oracle
