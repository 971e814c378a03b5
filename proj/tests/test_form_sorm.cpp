#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "susbench/catalog.hpp"
#include "susbench/error.hpp"
#include "susbench/form_sorm.hpp"
#include "susbench/special_fn.hpp"

using namespace susbench;

namespace {

std::vector<UPoint> compass(std::size_t k, double r) {
  std::vector<UPoint> s;
  for (std::size_t i = 0; i < k; ++i) {
    const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(k) + 0.1;
    s.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return s;
}

void check_point_properties(const LimitState& g, const BetaSearch& s) {
  for (const auto& p : s.points) {
    CHECK(p.converged);
    CHECK(std::abs(g(p.location)) <= 1e-8);
    CHECK(kkt_residual(p.location, p.gradient) <= 1e-5);
    CHECK(p.beta == doctest::Approx(std::hypot(p.location[0], p.location[1])));
  }
  for (std::size_t i = 1; i < s.points.size(); ++i) CHECK(s.points[i - 1].beta <= s.points[i].beta);
}

// g(Q^T u) for the product LSF, with exact derivatives.
LimitState rotated_product(double beta, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  auto back = [c, s](std::span<const double> u) {
    return std::array<double, 2>{c * u[0] + s * u[1], -s * u[0] + c * u[1]};
  };
  LimitState::Definition d;
  d.name = "rotated-product";
  d.value = [=](std::span<const double> u) {
    const auto v = back(u);
    return 0.5 * beta * beta - v[0] * v[1];
  };
  d.gradient = [=](std::span<const double> u) {
    const auto v = back(u);
    // Q * (-v2, -v1)
    const double a = -v[1], b = -v[0];
    return std::vector<double>{c * a - s * b, s * a + c * b};
  };
  d.hessian = [=](std::span<const double>) {
    // Q [[0,-1],[-1,0]] Q^T
    return std::vector<double>{2 * c * s, s * s - c * c, s * s - c * c, -2 * c * s};
  };
  return LimitState(std::move(d));
}

}  // namespace

TEST_CASE("kkt_residual") {
  const std::vector<double> u{3.0, 4.0};
  CHECK(kkt_residual(u, std::vector<double>{-6.0, -8.0}) == doctest::Approx(0.0).scale(1.0));
  CHECK(kkt_residual(u, std::vector<double>{0.3, 0.4}) == doctest::Approx(0.0).scale(1.0));
  CHECK(kkt_residual(u, std::vector<double>{4.0, -3.0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("default starts") {
  const auto s = default_starts(2);
  CHECK(s.size() == 49);
  const auto s3 = default_starts(3);
  CHECK(s3.size() == 19);
  for (const auto& u : s3) CHECK(u.size() == 3);
}

TEST_CASE("product limit state has two beta points") {
  const double beta = std::sqrt(12.0);
  const LimitState g = make_product_lsf(beta);
  const auto starts = compass(8, 5.0);
  const BetaSearch s = find_beta_points(g, starts);
  REQUIRE(s.points.size() == 2);
  check_point_properties(g, s);
  CHECK(s.starts.size() == starts.size());
  for (const auto& p : s.points) {
    CHECK(p.beta == doctest::Approx(beta).epsilon(1e-6));
    CHECK(std::abs(std::abs(p.location[0]) - std::sqrt(6.0)) <= 1e-6);
    CHECK(p.location[0] == doctest::Approx(p.location[1]));
    const SormFactor f = sorm_correction(g, p);
    CHECK(std::abs(f.det_value - 2.0) <= 1e-8);
    CHECK(f.correction == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(f.probability == doctest::Approx(phi_cdf(-beta) / std::sqrt(2.0)));
  }
  CHECK(s.points[0].location[0] * s.points[1].location[0] < 0.0);
  CHECK(sorm_probability(g, s.points) == doctest::Approx(mills_tail_equiv(beta)).epsilon(1e-12));
  CHECK(form_probability(s.points) == doctest::Approx(2.0 * phi_cdf(-beta)).epsilon(1e-12));

  const BetaSearch all = find_beta_points(g, default_starts(2));
  CHECK(all.points.size() == 2);
}

TEST_CASE("abs-product limit state has four beta points") {
  const double beta = std::sqrt(30.0);
  const LimitState g = make_abs_product_lsf(beta);
  const BetaSearch s = find_beta_points(g, compass(16, 5.0));
  REQUIRE(s.points.size() == 4);
  check_point_properties(g, s);
  int quadrants = 0;
  for (const auto& p : s.points) {
    CHECK(p.beta == doctest::Approx(beta).epsilon(1e-6));
    quadrants |= 1 << ((p.location[0] > 0) + 2 * (p.location[1] > 0));
    CHECK(sorm_correction(g, p).det_value == doctest::Approx(2.0).epsilon(1e-8));
  }
  CHECK(quadrants == 0xF);
  CHECK(sorm_probability(g, s.points) == doctest::Approx(2.0 * kSqrt2 * phi_cdf(-beta)).epsilon(1e-12));
}

TEST_CASE("linear series beta points") {
  const LimitState g = make_linear_series_lsf();
  const BetaSearch s = find_beta_points(g, default_starts(2));
  REQUIRE(s.points.size() == 2);
  check_point_properties(g, s);
  CHECK(s.points[0].beta == doctest::Approx(4.0));
  CHECK(s.points[0].location[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(s.points[0].location[1] == doctest::Approx(-4.0));
  CHECK(s.points[1].beta == doctest::Approx(5.0));
  CHECK(s.points[1].location[0] == doctest::Approx(5.0));
  for (const auto& p : s.points) {
    const SormFactor f = sorm_correction(g, p);
    CHECK(f.det_value == doctest::Approx(1.0));
    CHECK(f.correction == doctest::Approx(1.0));
  }
  CHECK(sorm_probability(g, s.points) == doctest::Approx(form_probability(s.points)));

  const LimitState logi = make_logistic_series_lsf();
  const BetaSearch t = find_beta_points(logi, default_starts(2));
  REQUIRE(t.points.size() == 2);
  check_point_properties(logi, t);
  CHECK(t.points[0].beta == doctest::Approx(4.0));
  CHECK(t.points[1].beta == doctest::Approx(5.0));
}

TEST_CASE("rotation invariance") {
  const double beta = std::sqrt(12.0);
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  for (int i = 0; i < 10; ++i) {
    const LimitState g = rotated_product(beta, ang(gen));
    const BetaSearch s = find_beta_points(g, default_starts(2));
    REQUIRE(s.points.size() == 2);
    check_point_properties(g, s);
    for (const auto& p : s.points) {
      CHECK(std::abs(p.beta - beta) <= 1e-8);
      CHECK(std::abs(sorm_correction(g, p).det_value - 2.0) <= 1e-8);
    }
  }
}

TEST_CASE("scale invariance") {
  for (const double lambda : {1e-3, 0.5, 7.0, 1e4}) {
    CAPTURE(lambda);
    for (const LimitState& g : {make_product_lsf(3.0), make_abs_product_lsf(4.0), make_logistic_series_lsf()}) {
      const LimitState h = g.scaled(lambda);
      const BetaSearch a = find_beta_points(g, default_starts(2));
      const BetaSearch b = find_beta_points(h, default_starts(2));
      REQUIRE(a.points.size() == b.points.size());
      for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(b.points[i].beta == doctest::Approx(a.points[i].beta).epsilon(1e-8));
        const SormFactor fa = sorm_correction(g, a.points[i]);
        const SormFactor fb = sorm_correction(h, b.points[i]);
        CHECK(fb.det_value == doctest::Approx(fa.det_value).epsilon(1e-6));
        CHECK(fb.probability == doctest::Approx(fa.probability).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("non-positive determinant is reported") {
  // Circle of radius 3 around the origin: failure outside, beta point on the
  // circle is a maximizer of curvature with det = 1 - beta/r = 0.
  LimitState::Definition d;
  d.name = "circle";
  d.value = [](std::span<const double> u) { return 4.5 - 0.5 * (u[0] * u[0] + u[1] * u[1]); };
  d.gradient = [](std::span<const double> u) { return std::vector<double>{-u[0], -u[1]}; };
  d.hessian = [](std::span<const double>) { return std::vector<double>{-1, 0, 0, -1}; };
  const LimitState g(std::move(d));
  BetaPoint bp;
  bp.location = {3.0, 0.0};
  bp.beta = 3.0;
  bp.gradient = g.gradient(bp.location);
  bp.converged = true;
  try {
    sorm_correction(g, bp);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::domain);
  }
}

TEST_CASE("unreachable surface reports per-start failures") {
  LimitState::Definition d;
  d.name = "never";
  d.value = [](std::span<const double> u) { return 1.0 + u[0] * u[0] + u[1] * u[1]; };
  const LimitState g(std::move(d));
  const BetaSearch s = find_beta_points(g, compass(4, 2.0));
  CHECK(s.points.empty());
  REQUIRE(s.starts.size() == 4);
  for (const auto& r : s.starts) CHECK_FALSE(r.converged);
}

TEST_CASE("fit_asymptotic") {
  const std::vector<double> betas{2, 3, 4, 5};
  std::vector<double> p1, p2;
  for (double b : betas) {
    p1.push_back(std::sqrt(2.0) * phi_cdf(-b));
    p2.push_back(3.0 * b * b * phi_cdf(-b));
  }
  const AsymptoticFit f1 = fit_asymptotic(betas, p1);
  CHECK(std::abs(f1.c - std::sqrt(2.0)) <= 1e-10);
  CHECK(std::abs(f1.b) <= 1e-10);
  CHECK(f1.residual <= 1e-10);
  const AsymptoticFit f2 = fit_asymptotic(betas, p2);
  CHECK(std::abs(f2.c - 3.0) <= 1e-10);
  CHECK(std::abs(f2.b - 2.0) <= 1e-10);
  CHECK(f2.residual <= 1e-10);

  const AsymptoticFit pinned = fit_asymptotic(betas, p1, true);
  CHECK(pinned.b_pinned);
  CHECK(pinned.b == 0.0);
  CHECK(std::abs(pinned.c - std::sqrt(2.0)) <= 1e-10);

  // A decreasing trend would need b < 0; it is clamped.
  std::vector<double> p3;
  for (double b : betas) p3.push_back(phi_cdf(-b) / b);
  const AsymptoticFit f3 = fit_asymptotic(betas, p3);
  CHECK(f3.b == 0.0);
  CHECK(f3.c > 0.0);
  CHECK(f3.residual > 0.0);

  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::runtime;
  };
  const std::vector<double> same{3, 3, 3};
  const std::vector<double> ps{1e-3, 2e-3, 3e-3};
  CHECK(code_of([&] { fit_asymptotic(same, ps); }) == Errc::degenerate);
  const std::vector<double> one{3.0};
  const std::vector<double> p_one{1e-3};
  CHECK(code_of([&] { fit_asymptotic(one, p_one); }) == Errc::insufficient_data);
  CHECK_NOTHROW(fit_asymptotic(one, p_one, true));
  const std::vector<double> zeros{0.0, 0.0, 1e-3};
  CHECK(code_of([&] { fit_asymptotic(std::vector<double>{2, 3, 4}, zeros); }) == Errc::insufficient_data);
}
