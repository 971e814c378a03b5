#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "susbench/limit_state.hpp"

namespace susbench {

struct McResult {
  double p_hat = 0.0;
  std::uint64_t n = 0;
  std::uint64_t failures = 0;
  /// Binomial c.o.v. sqrt((1 - p) / (p n)); empty when nothing failed.
  std::optional<double> cov_hat;
  /// The first failing points in draw order, up to the requested capacity.
  std::vector<UPoint> failure_points;
};

/// Plain Monte Carlo. Draws are split into fixed blocks with one substream
/// each, so the result does not depend on `threads`.
McResult run_mc(const LimitState& lsf, std::uint64_t n, std::uint64_t seed,
                std::size_t keep_failures = 0, unsigned threads = 0);

}  // namespace susbench
