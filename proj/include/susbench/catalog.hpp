#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "susbench/limit_state.hpp"

namespace susbench {

/// Normal body spliced to a Pareto upper tail at `threshold`. The exponent
/// is fixed by continuity of the CDF at the splice: Phi(a) = 1 - a^c.
struct TailTransform {
  double threshold = 3.5;
  double exponent;  // negative

  static TailTransform standard(double threshold = 3.5);
};

/// Maps a standard normal coordinate to the spliced-tail variable.
/// Identity at or below the threshold, (1 - Phi(u))^(1/c) above it.
double tail_to_x(double u2, const TailTransform& t);
/// Derivative of tail_to_x with respect to u2.
double tail_to_x_derivative(double u2, const TailTransform& t);

LimitState make_product_lsf(double beta);
LimitState make_abs_product_lsf(double beta);
LimitState make_piecewise_series_lsf();
LimitState make_pareto_tail_lsf();
LimitState make_linear_series_lsf();
LimitState make_logistic_series_lsf();
LimitState make_metaball_lsf(double d);
LimitState make_vonmises_mixture_lsf();

/// Stable names of every catalog entry, in gallery order.
const std::vector<std::string>& catalog_names();
/// Default parameters of a named entry (empty when unparameterized).
std::map<std::string, double> catalog_defaults(std::string_view name);
/// Builds a catalog entry; `params` override the defaults. Unknown names
/// throw Errc::unknown_lsf, unknown keys or bad values Errc::invalid_argument.
LimitState make_lsf(std::string_view name, const std::map<std::string, double>& params = {});

struct Reference {
  double probability;
  std::string kind;  // "exact" for closed forms and one-dimensional quadrature
};

/// Known failure probability of a catalog entry, if one is available.
std::optional<Reference> reference_probability(const LimitState& lsf);

/// Failure probability of g = beta^2/2 - u1*u2: P(u1 u2 > beta^2/2), by
/// quadrature of 2 * int_0^inf phi(x) Phi(-beta^2 / (2x)) dx.
double product_exact_probability(double beta);

/// Failure probability of the spliced-tail ellipse problem by quadrature
/// over u1 of the conditional exceedance probability in x2.
double pareto_tail_exact_probability();

}  // namespace susbench
