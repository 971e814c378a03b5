#include "susbench/form_sorm.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "susbench/error.hpp"
#include "susbench/special_fn.hpp"

namespace susbench {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

UPoint to_point(const VectorXd& v) { return UPoint(v.data(), v.data() + v.size()); }

MatrixXd hessian_of(const LimitState& lsf, const UPoint& u) {
  const auto n = static_cast<Eigen::Index>(u.size());
  const auto h = lsf.hessian(u);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      h.data(), n, n);
}

struct Solve {
  UPoint u;
  std::size_t iterations = 0;
  bool converged = false;
  const char* reason = "iteration limit";
};

// Newton step on u + lambda grad g = 0, g = 0. Empty when singular.
std::optional<VectorXd> kkt_newton_step(const LimitState& lsf, const VectorXd& u, double g,
                                        const VectorXd& grad) {
  const auto n = u.size();
  const double lambda = -u.dot(grad) / grad.squaredNorm();
  MatrixXd jac = MatrixXd::Zero(n + 1, n + 1);
  jac.topLeftCorner(n, n) = MatrixXd::Identity(n, n) + lambda * hessian_of(lsf.local_piece(to_point(u)), to_point(u));
  jac.topRightCorner(n, 1) = grad;
  jac.bottomLeftCorner(1, n) = grad.transpose();
  VectorXd rhs(n + 1);
  rhs.head(n) = -(u + lambda * grad);
  rhs(n) = -g;
  Eigen::FullPivLU<MatrixXd> lu(jac);
  if (!lu.isInvertible()) return std::nullopt;
  return VectorXd(lu.solve(rhs).head(n));
}

Solve solve_from(const LimitState& lsf, const UPoint& start, const BetaSearchOptions& opts) {
  Solve out;
  VectorXd u = to_eigen(start);
  double penalty = 0.0;
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it + 1;
    const UPoint up = to_point(u);
    const double g = lsf(up);
    const auto grad_v = lsf.gradient(up);
    const VectorXd grad = to_eigen(grad_v);
    const double gnorm = grad.norm();
    if (!std::isfinite(g) || !(gnorm > 1e-300)) {
      out.reason = "vanishing gradient";
      return out;
    }
    const double kkt = kkt_residual(up, grad_v);
    if (std::abs(g) <= opts.g_tol && kkt <= opts.kkt_tol) {
      // A few more Newton steps take the point to round-off, so the result
      // does not depend on the scale of g through g_tol.
      double g_best = std::abs(g), kkt_best = kkt;
      for (int polish = 0; polish < 3; ++polish) {
        const VectorXd grad_p = to_eigen(lsf.gradient(to_point(u)));
        const auto step = kkt_newton_step(lsf, u, lsf(to_point(u)), grad_p);
        if (!step) break;
        const VectorXd trial = u + *step;
        const UPoint tp = to_point(trial);
        const double gt = std::abs(lsf(tp));
        const double kt = kkt_residual(tp, lsf.gradient(tp));
        if (!(gt <= g_best && kt <= std::max(kkt_best, 1e-12))) break;
        u = trial;
        g_best = gt;
        kkt_best = kt;
      }
      out.u = to_point(u);
      out.converged = true;
      out.reason = "converged";
      return out;
    }

    if (kkt < 0.05 && std::abs(g) < 0.05 * std::max(1.0, gnorm * u.norm())) {
      if (auto step = kkt_newton_step(lsf, u, g, grad)) {
        const VectorXd trial = u + *step;
        const UPoint tp = to_point(trial);
        const double gt = lsf(tp);
        const auto gradt = lsf.gradient(tp);
        if (std::isfinite(gt) && kkt_residual(tp, gradt) <= std::max(kkt, 1e-12) * 1.5 &&
            std::abs(gt) <= std::max(std::abs(g), opts.g_tol)) {
          u = trial;
          continue;
        }
      }
    }

    // HL-RF direction with a merit line search on 0.5 |u|^2 + c |g|.
    const VectorXd d = ((grad.dot(u) - g) / (gnorm * gnorm)) * grad - u;
    penalty = std::max(penalty, 2.0 * u.norm() / gnorm + 1.0);
    auto merit = [&](const VectorXd& x, double gx) { return 0.5 * x.squaredNorm() + penalty * std::abs(gx); };
    const double m0 = merit(u, g);
    double step = 1.0;
    bool moved = false;
    for (int k = 0; k < 50; ++k, step *= 0.5) {
      const VectorXd trial = u + step * d;
      const double gt = lsf(to_point(trial));
      if (std::isfinite(gt) && merit(trial, gt) < m0) {
        u = trial;
        moved = true;
        break;
      }
    }
    if (!moved) {
      out.reason = "line search failed";
      return out;
    }
  }
  return out;
}

double det_matrix(const LimitState& lsf, const UPoint& u, double beta) {
  const LimitState& piece = lsf.local_piece(u);
  const VectorXd grad = to_eigen(piece.gradient(u));
  const auto n = grad.size();
  const VectorXd normal = grad / grad.norm();
  const MatrixXd proj = normal * normal.transpose();
  const MatrixXd eye = MatrixXd::Identity(n, n);
  const MatrixXd h_tilde = eye + (beta / grad.norm()) * hessian_of(piece, u);
  const MatrixXd m = (eye - proj) * h_tilde * (eye - proj) + proj;
  return m.determinant();
}

}  // namespace

std::vector<UPoint> default_starts(std::size_t dim) {
  std::vector<UPoint> starts;
  const double radii[] = {2.0, 5.0, 8.0};
  if (dim == 2) {
    for (double r : radii)
      for (int k = 0; k < 16; ++k) {
        const double a = 2.0 * kPi * k / 16.0 + kPi / 64.0;
        starts.push_back({r * std::cos(a), r * std::sin(a)});
      }
  } else {
    for (double r : radii)
      for (std::size_t i = 0; i < dim; ++i)
        for (double s : {1.0, -1.0}) {
          UPoint u(dim, 0.0);
          u[i] = s * r;
          starts.push_back(u);
        }
  }
  starts.push_back(UPoint(dim, 1e-3));
  return starts;
}

double kkt_residual(std::span<const double> u, std::span<const double> grad) {
  const VectorXd x = to_eigen(u);
  const VectorXd g = to_eigen(grad);
  if (x.norm() == 0.0 || g.norm() == 0.0) return std::numeric_limits<double>::infinity();
  const VectorXd a = x / x.norm();
  const VectorXd b = g / g.norm();
  return std::min((a - b).norm(), (a + b).norm());
}

BetaSearch find_beta_points(const LimitState& lsf, std::span<const UPoint> starts,
                            const BetaSearchOptions& opts) {
  BetaSearch out;
  for (const auto& s : starts) {
    if (s.size() != lsf.dim()) throw Error(Errc::invalid_argument, "start dimension mismatch");
    Solve sol = solve_from(lsf, s, opts);
    out.starts.push_back({s, sol.converged, sol.iterations, sol.reason});
    if (!sol.converged) continue;
    const VectorXd u = to_eigen(sol.u);
    const bool seen = std::any_of(out.points.begin(), out.points.end(), [&](const BetaPoint& p) {
      return (to_eigen(p.location) - u).norm() < opts.cluster_tol;
    });
    if (seen) continue;
    const double beta = u.norm();
    if (!(beta > 0.0)) continue;
    // Second-order test: a local minimizer of |u| on g = 0 has positive det.
    if (!(det_matrix(lsf, sol.u, beta) > 0.0)) {
      out.starts.back().converged = false;
      out.starts.back().reason = "not a local minimizer";
      continue;
    }
    BetaPoint bp;
    bp.location = sol.u;
    bp.beta = beta;
    bp.gradient = lsf.local_piece(sol.u).gradient(sol.u);
    bp.converged = true;
    bp.iterations = sol.iterations;
    out.points.push_back(std::move(bp));
  }
  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const BetaPoint& a, const BetaPoint& b) { return a.beta < b.beta; });
  return out;
}

SormFactor sorm_correction(const LimitState& lsf, const BetaPoint& bp) {
  if (!bp.converged) throw Error(Errc::invalid_argument, "sorm_correction: beta point not converged");
  const double det = det_matrix(lsf, bp.location, bp.beta);
  if (!(det > 0.0))
    throw Error(Errc::domain, "sorm_correction: determinant not positive, second-order approximation invalid");
  SormFactor f;
  f.det_value = det;
  f.correction = 1.0 / std::sqrt(det);
  f.probability = f.correction * phi_cdf(-bp.beta);
  return f;
}

double form_probability(std::span<const BetaPoint> points) {
  double p = 0.0;
  for (const auto& bp : points) p += phi_cdf(-bp.beta);
  return p;
}

double sorm_probability(const LimitState& lsf, std::span<const BetaPoint> points) {
  double p = 0.0;
  for (const auto& bp : points) p += sorm_correction(lsf, bp).probability;
  return p;
}

AsymptoticFit fit_asymptotic(std::span<const double> betas, std::span<const double> p_estimates,
                             bool pin_b_zero) {
  if (betas.size() != p_estimates.size())
    throw Error(Errc::invalid_argument, "fit_asymptotic: length mismatch");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0)) throw Error(Errc::domain, "fit_asymptotic: beta must be positive");
    if (!(p_estimates[i] > 0.0)) continue;
    x.push_back(std::log(betas[i]));
    y.push_back(std::log(p_estimates[i]) - std::log(phi_cdf(-betas[i])));
  }
  const std::size_t need = pin_b_zero ? 1 : 2;
  if (x.size() < need) throw Error(Errc::insufficient_data, "fit_asymptotic: too few positive estimates");

  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }

  AsymptoticFit fit;
  if (!pin_b_zero) {
    if (!(sxx > 1e-24)) throw Error(Errc::degenerate, "fit_asymptotic: all betas equal, slope undetermined");
    fit.b = sxy / sxx;
  }
  if (pin_b_zero || fit.b < 0.0) {
    fit.b = 0.0;
    fit.b_pinned = true;
  }
  const double intercept = my - fit.b * mx;
  fit.c = std::exp(intercept);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - intercept - fit.b * x[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss);
  return fit;
}

}  // namespace susbench
