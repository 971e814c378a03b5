#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "susbench/limit_state.hpp"
#include "susbench/rng.hpp"

namespace susbench {

struct SusConfig {
  std::size_t n_samples = 500;
  double p0 = 0.1;
  std::size_t chain_len = 10;
  double proposal_spread = 1.0;
  std::size_t max_levels = 20;
  std::uint64_t seed = 0;

  /// Throws Errc::config unless p0 * n_samples is a positive integer whose
  /// chains of length chain_len exactly refill n_samples.
  void validate() const;
  /// Number of seeds carried to the next level, p0 * n_samples.
  std::size_t seeds_per_level() const;
};

/// One nested domain F_i = {g <= a_i}. Intermediate levels hold the Markov
/// chain population of F_i; the terminal level (threshold 0) holds the
/// failing points of the last population.
struct SusLevel {
  std::size_t index = 0;  // 1-based
  double threshold = 0.0;
  std::vector<UPoint> samples;
  std::vector<double> values;
  double conditional_estimate = 0.0;  // estimate of P(F_i | F_{i-1})
  double chain_acceptance_rate = 0.0;  // 0 at the terminal level, which runs no chains
};

enum class Termination { reached_zero, max_levels, stalled };

std::string_view to_string(Termination t);

struct SusResult {
  std::vector<UPoint> initial_samples;  // direct Monte Carlo population
  std::vector<double> initial_values;
  std::vector<SusLevel> levels;
  double p_hat = 0.0;
  std::uint64_t total_evals = 0;
  Termination terminated = Termination::reached_zero;

  std::vector<double> conditional_estimates() const;
  /// Samples of the terminal level; the points that fail.
  const std::vector<UPoint>& final_samples() const { return levels.back().samples; }
};

/// Runs subset simulation. Deterministic for a given (lsf, cfg).
SusResult run_sus(const LimitState& lsf, const SusConfig& cfg);

/// The ceil(p0 * N)-th smallest value, clamped to 0 when it is not positive.
double select_threshold(std::span<const double> lsf_values, double p0);

struct ChainStep {
  UPoint point;
  double value;
  std::size_t coordinates_accepted;  // of the component-wise proposal
  bool moved;
  bool evaluated;
};

/// One component-wise modified Metropolis move restricted to {g < threshold}.
/// `current_value` must equal g(current) and be below the threshold.
ChainStep mm_chain_step(const UPoint& current, double current_value, const LimitState& lsf,
                        double threshold, double spread, Rng& rng);

}  // namespace susbench
