#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "susbench/limit_state.hpp"

namespace susbench {

struct BetaPoint {
  UPoint location;
  double beta = 0.0;
  std::vector<double> gradient;  // of the active piece at `location`
  bool converged = false;
  std::size_t iterations = 0;
};

struct StartReport {
  UPoint start;
  bool converged = false;
  std::size_t iterations = 0;
  const char* reason = "";
};

struct BetaSearch {
  std::vector<BetaPoint> points;  // distinct local minimizers, ascending beta
  std::vector<StartReport> starts;
};

struct BetaSearchOptions {
  std::size_t max_iterations = 200;
  double g_tol = 1e-8;
  double kkt_tol = 1e-5;
  double cluster_tol = 1e-3;
};

/// 16 compass directions at radii {2, 5, 8} plus a nudge off the origin.
/// Dimensions other than two get +/- axis directions at the same radii.
std::vector<UPoint> default_starts(std::size_t dim);

/// Multi-start search for local minimal-distance points on g = 0.
/// Each start runs damped HL-RF with a merit line search, finished by
/// Newton steps on the Lagrange conditions once close. Converged points that
/// are not local minimizers (second-order test fails) are dropped.
BetaSearch find_beta_points(const LimitState& lsf, std::span<const UPoint> starts,
                            const BetaSearchOptions& opts = {});

/// |u/|u| -/+ grad/|grad||, the smaller of both orientations.
double kkt_residual(std::span<const double> u, std::span<const double> grad);

struct SormFactor {
  double det_value = 0.0;
  double correction = 0.0;   // 1 / sqrt(det)
  double probability = 0.0;  // correction * Phi(-beta)
};

/// Second-order correction at a beta point from
/// det((I - P) H~ (I - P) + P), H~ = I + beta |grad g|^-1 Hess g, P = n n^T.
/// Min-type functions are analyzed on the branch active at the point.
/// Throws Errc::domain when the determinant is not positive.
SormFactor sorm_correction(const LimitState& lsf, const BetaPoint& bp);

/// Sum of Phi(-beta) over the points (first-order estimate).
double form_probability(std::span<const BetaPoint> points);
/// Sum of per-point second-order contributions.
double sorm_probability(const LimitState& lsf, std::span<const BetaPoint> points);

struct AsymptoticFit {
  double c = 0.0;
  double b = 0.0;
  double residual = 0.0;  // root sum of squared log residuals
  bool b_pinned = false;
};

/// Least squares of log p - log Phi(-beta) on [1, log beta], c = exp(intercept),
/// b = slope, with b held at 0 when pinned or when the free slope is negative.
AsymptoticFit fit_asymptotic(std::span<const double> betas, std::span<const double> p_estimates,
                             bool pin_b_zero = false);

}  // namespace susbench
