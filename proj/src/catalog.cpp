#include "susbench/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "susbench/error.hpp"
#include "susbench/special_fn.hpp"

namespace susbench {

namespace {

using Span = std::span<const double>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::domain, std::string(what) + " must be positive");
}

LimitState smooth(std::string name, LimitState::ValueFn f, LimitState::VectorFn grad,
                  LimitState::VectorFn hess = {}) {
  LimitState::Definition d;
  d.name = std::move(name);
  d.value = std::move(f);
  d.gradient = std::move(grad);
  d.hessian = std::move(hess);
  return LimitState(std::move(d));
}

LimitState::VectorFn constant_hessian(std::vector<double> h) {
  return [h = std::move(h)](Span) { return h; };
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LimitState linear_edge() {
  return smooth("5-u1", [](Span u) { return 5.0 - u[0]; },
                [](Span) { return std::vector<double>{-1.0, 0.0}; },
                constant_hessian({0.0, 0.0, 0.0, 0.0}));
}

double polar_angle(double u1, double u2) {
  double phi = std::atan2(u2, u1);
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= 2.0 * kPi) phi = 0.0;
  return phi;
}

}  // namespace

TailTransform TailTransform::standard(double threshold) {
  require_positive(threshold - 1.0, "tail threshold minus one");
  return TailTransform{threshold, std::log(phi_cdf(-threshold)) / std::log(threshold)};
}

double tail_to_x(double u2, const TailTransform& t) {
  if (u2 <= t.threshold) return u2;
  return std::pow(phi_cdf(-u2), 1.0 / t.exponent);
}

double tail_to_x_derivative(double u2, const TailTransform& t) {
  if (u2 <= t.threshold) return 1.0;
  const double x = tail_to_x(u2, t);
  return -x * phi_pdf(u2) / (t.exponent * phi_cdf(-u2));
}

LimitState make_product_lsf(double beta) {
  require_positive(beta, "beta");
  const double half = 0.5 * beta * beta;
  LimitState::Definition d;
  d.name = "product";
  d.params = {{"beta", beta}};
  d.value = [half](Span u) { return half - u[0] * u[1]; };
  d.gradient = [](Span u) { return std::vector<double>{-u[1], -u[0]}; };
  d.hessian = constant_hessian({0.0, -1.0, -1.0, 0.0});
  d.quadrant_symmetric = true;
  return LimitState(std::move(d));
}

LimitState make_abs_product_lsf(double beta) {
  require_positive(beta, "beta");
  const double half = 0.5 * beta * beta;
  LimitState::Definition d;
  d.name = "abs-product";
  d.params = {{"beta", beta}};
  d.value = [half](Span u) { return half - std::abs(u[0] * u[1]); };
  // |u1 u2| = max(u1 u2, -u1 u2), so g is the minimum of two smooth saddles.
  d.branches.push_back(make_product_lsf(beta));
  d.branches.push_back(smooth(
      "abs-product/-", [half](Span u) { return half + u[0] * u[1]; },
      [](Span u) { return std::vector<double>{u[1], u[0]}; }, constant_hessian({0.0, 1.0, 1.0, 0.0})));
  d.quadrant_symmetric = true;
  return LimitState(std::move(d));
}

LimitState make_piecewise_series_lsf() {
  auto g1 = [](Span u) { return u[0] > 3.5 ? 4.0 - u[0] : 0.85 - 0.1 * u[0]; };
  // The branch switch of g2 is taken on u2; it is continuous there (0.3).
  auto g2 = [](Span u) { return u[1] > 2.0 ? 0.5 - 0.1 * u[1] : 2.3 - u[1]; };
  LimitState::Definition d;
  d.name = "piecewise-series";
  d.value = [g1, g2](Span u) { return std::min(g1(u), g2(u)); };
  d.branches.push_back(smooth(
      "piecewise-series/g1", g1,
      [](Span u) { return std::vector<double>{u[0] > 3.5 ? -1.0 : -0.1, 0.0}; },
      constant_hessian({0.0, 0.0, 0.0, 0.0})));
  d.branches.push_back(smooth(
      "piecewise-series/g2", g2,
      [](Span u) { return std::vector<double>{0.0, u[1] > 2.0 ? -0.1 : -1.0}; },
      constant_hessian({0.0, 0.0, 0.0, 0.0})));
  return LimitState(std::move(d));
}

LimitState make_pareto_tail_lsf() {
  const TailTransform t = TailTransform::standard();
  LimitState::Definition d;
  d.name = "pareto-tail";
  d.params = {{"threshold", t.threshold}, {"exponent", t.exponent}};
  d.value = [t](Span u) {
    const double x2 = tail_to_x(u[1], t);
    return 0.1 * (52.0 - 1.5 * u[0] * u[0] - x2 * x2);
  };
  d.gradient = [t](Span u) {
    const double x2 = tail_to_x(u[1], t);
    return std::vector<double>{-0.3 * u[0], -0.2 * x2 * tail_to_x_derivative(u[1], t)};
  };
  return LimitState(std::move(d));
}

LimitState make_linear_series_lsf() {
  LimitState::Definition d;
  d.name = "linear-series";
  d.value = [](Span u) { return std::min(5.0 - u[0], 4.0 + u[1]); };
  d.branches.push_back(linear_edge());
  d.branches.push_back(smooth("4+u2", [](Span u) { return 4.0 + u[1]; },
                              [](Span) { return std::vector<double>{0.0, 1.0}; },
                              constant_hessian({0.0, 0.0, 0.0, 0.0})));
  return LimitState(std::move(d));
}

LimitState make_logistic_series_lsf() {
  auto term = [](Span u) { return logistic(2.0 * (u[1] + 4.0)) - 0.5; };
  LimitState::Definition d;
  d.name = "logistic-series";
  d.value = [term](Span u) { return std::min(5.0 - u[0], term(u)); };
  d.branches.push_back(linear_edge());
  d.branches.push_back(smooth(
      "logistic(u2)", term,
      [](Span u) {
        const double s = logistic(2.0 * (u[1] + 4.0));
        return std::vector<double>{0.0, 2.0 * s * (1.0 - s)};
      },
      [](Span u) {
        const double s = logistic(2.0 * (u[1] + 4.0));
        return std::vector<double>{0.0, 0.0, 0.0, 4.0 * s * (1.0 - s) * (1.0 - 2.0 * s)};
      }));
  return LimitState(std::move(d));
}

LimitState make_metaball_lsf(double d_offset) {
  require_positive(d_offset, "d");
  LimitState::Definition d;
  d.name = "metaball";
  d.params = {{"d", d_offset}};
  d.value = [d_offset](Span u) {
    const double q1 = 4.0 * (u[0] + 2.0) * (u[0] + 2.0) / 9.0 + u[1] * u[1] / 25.0;
    const double q2 = (u[0] - 2.5) * (u[0] - 2.5) / 4.0 + (u[1] - 0.5) * (u[1] - 0.5) / 25.0;
    return 30.0 / (q1 * q1 + 1.0) + 20.0 / (q2 * q2 + 1.0) - d_offset;
  };
  d.gradient = [](Span u) {
    const double q1 = 4.0 * (u[0] + 2.0) * (u[0] + 2.0) / 9.0 + u[1] * u[1] / 25.0;
    const double q2 = (u[0] - 2.5) * (u[0] - 2.5) / 4.0 + (u[1] - 0.5) * (u[1] - 0.5) / 25.0;
    const double w1 = q1 * q1 + 1.0;
    const double w2 = q2 * q2 + 1.0;
    const double s1 = -30.0 * 2.0 * q1 / (w1 * w1);
    const double s2 = -20.0 * 2.0 * q2 / (w2 * w2);
    return std::vector<double>{s1 * 8.0 * (u[0] + 2.0) / 9.0 + s2 * 0.5 * (u[0] - 2.5),
                               s1 * 2.0 * u[1] / 25.0 + s2 * 2.0 * (u[1] - 0.5) / 25.0};
  };
  return LimitState(std::move(d));
}

LimitState make_vonmises_mixture_lsf() {
  LimitState::Definition d;
  d.name = "vonmises-mix";
  // The 0.0055 factor multiplies the first mixture component only. No
  // analytic gradient: the polar angle is singular at the origin.
  d.value = [](Span u) {
    const double r = std::hypot(u[0], u[1]);
    const double phi = polar_angle(u[0], u[1]);
    const double first = phi_cdf(r - 0.5) * std::exp(4.0 * std::cos(phi));
    const double second = 12.0 * (phi_cdf(0.004 * r) - 0.5) * std::exp(std::cos(phi - kPi));
    return 0.19 - 0.0055 * first - second;
  };
  return LimitState(std::move(d));
}

namespace {

struct Entry {
  std::string name;
  std::map<std::string, double> defaults;
  std::function<LimitState(const std::map<std::string, double>&)> build;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"product", {{"beta", std::sqrt(12.0)}},
       [](const auto& p) { return make_product_lsf(p.at("beta")); }},
      {"abs-product", {{"beta", std::sqrt(30.0)}},
       [](const auto& p) { return make_abs_product_lsf(p.at("beta")); }},
      {"piecewise-series", {}, [](const auto&) { return make_piecewise_series_lsf(); }},
      {"pareto-tail", {}, [](const auto&) { return make_pareto_tail_lsf(); }},
      {"linear-series", {}, [](const auto&) { return make_linear_series_lsf(); }},
      {"logistic-series", {}, [](const auto&) { return make_logistic_series_lsf(); }},
      {"metaball", {{"d", 5.0}}, [](const auto& p) { return make_metaball_lsf(p.at("d")); }},
      {"vonmises-mix", {}, [](const auto&) { return make_vonmises_mixture_lsf(); }},
  };
  return table;
}

const Entry& find_entry(std::string_view name) {
  for (const auto& e : entries())
    if (e.name == name) return e;
  throw Error(Errc::unknown_lsf, "unknown limit state '" + std::string(name) + "'");
}

double series_exact() {
  const double a = phi_cdf(-4.0);
  const double b = phi_cdf(-5.0);
  return a + b - a * b;
}

}  // namespace

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : entries()) out.push_back(e.name);
    return out;
  }();
  return names;
}

std::map<std::string, double> catalog_defaults(std::string_view name) {
  return find_entry(name).defaults;
}

LimitState make_lsf(std::string_view name, const std::map<std::string, double>& params) {
  const Entry& e = find_entry(name);
  auto merged = e.defaults;
  for (const auto& [key, value] : params) {
    if (!merged.contains(key))
      throw Error(Errc::invalid_argument,
                  "limit state '" + e.name + "' has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw Error(Errc::invalid_argument, "parameter '" + key + "' is not finite");
    merged[key] = value;
  }
  try {
    return e.build(merged);
  } catch (const Error& err) {
    if (err.code() == Errc::domain) throw Error(Errc::invalid_argument, err.what());
    throw;
  }
}

double product_exact_probability(double beta) {
  if (!(beta > 0.0)) throw Error(Errc::domain, "product_exact_probability: beta must be positive");
  const double c = 0.5 * beta * beta;
  auto integrand = [c](double x) { return x <= 0.0 ? 0.0 : phi_pdf(x) * phi_cdf(-c / x); };
  using boost::math::quadrature::gauss_kronrod;
  // The integrand peaks near sqrt(c); it vanishes to double precision past 40.
  const double m = std::sqrt(c);
  const std::vector<double> cuts{0.0, 0.25 * m, 0.5 * m, m, 2.0 * m, 4.0 * m, std::max(40.0, 5.0 * m)};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += gauss_kronrod<double, 61>::integrate(integrand, cuts[i], cuts[i + 1], 15, 1e-15);
  return 2.0 * total;
}

double pareto_tail_exact_probability() {
  const TailTransform t = TailTransform::standard();
  // P(1.5 u1^2 + x2^2 > 52 | u1) with x2 normal below the splice, Pareto above.
  auto conditional = [t](double u1) {
    const double s2 = 52.0 - 1.5 * u1 * u1;
    if (s2 <= 0.0) return 1.0;
    const double s = std::sqrt(s2);
    const double upper = s > t.threshold ? std::pow(s, t.exponent) : phi_cdf(-s);
    return phi_cdf(-s) + upper;
  };
  auto integrand = [&](double u1) { return phi_pdf(u1) * conditional(u1); };
  using boost::math::quadrature::gauss_kronrod;
  const double knee = std::sqrt((52.0 - t.threshold * t.threshold) / 1.5);
  const double edge = std::sqrt(52.0 / 1.5);
  // Symmetric in u1; split at the kinks of the conditional probability.
  const std::vector<double> cuts{0.0, knee, edge, 40.0};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += gauss_kronrod<double, 61>::integrate(integrand, cuts[i], cuts[i + 1], 15, 1e-15);
  return 2.0 * total;
}

std::optional<Reference> reference_probability(const LimitState& lsf) {
  const auto& n = lsf.name();
  if (n == "product") return Reference{product_exact_probability(lsf.params().at("beta")), "exact"};
  if (n == "abs-product")
    return Reference{2.0 * product_exact_probability(lsf.params().at("beta")), "exact"};
  if (n == "linear-series" || n == "logistic-series" || n == "piecewise-series")
    return Reference{series_exact(), "exact"};
  if (n == "pareto-tail") return Reference{pareto_tail_exact_probability(), "exact"};
  return std::nullopt;
}

}  // namespace susbench
