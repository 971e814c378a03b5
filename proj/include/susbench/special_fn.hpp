#pragma once

// Special functions used throughout the library. Everything here is a pure
// function of its arguments.

namespace susbench {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;

/// Standard normal density.
double phi_pdf(double x);

/// Standard normal CDF. Absolute error below 1e-15 on |x| <= 8.
double phi_cdf(double x);

/// Inverse of the standard normal CDF: Acklam rational start plus one Halley step.
/// Throws Error(Errc::domain) unless 0 < p < 1.
double phi_inv(double p);

/// Modified Bessel function of the second kind, order zero, for z > 0.
/// Power series for z <= 2, Steed's continued fraction above.
double bessel_k0(double z);

/// sqrt(2) * Phi(-beta): the large-beta equivalent of the product-LSF
/// failure probability. Requires beta > 0.
double mills_tail_equiv(double beta);

/// K0(beta^2 / 2) / pi, the closed form usually quoted for the product LSF.
/// It is the density of u1*u2 at beta^2/2, not its tail, and overstates the
/// failure probability (by 7% at beta^2 = 12); asymptotically equivalent.
double product_k0_formula(double beta);

}  // namespace susbench
