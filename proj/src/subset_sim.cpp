#include "susbench/subset_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "susbench/error.hpp"

namespace susbench {

namespace {

std::size_t level_seed_count(double p0, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(p0 * static_cast<double>(n) - 1e-9));
}

}  // namespace

void SusConfig::validate() const {
  if (n_samples == 0) throw Error(Errc::config, "n_samples must be positive");
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error(Errc::config, "p0 must lie in (0, 1)");
  if (chain_len == 0) throw Error(Errc::config, "chain_len must be positive");
  if (!(proposal_spread >= 0.0) || !std::isfinite(proposal_spread))
    throw Error(Errc::config, "proposal_spread must be finite and non-negative");
  if (max_levels == 0) throw Error(Errc::config, "max_levels must be positive");
  const double seeds = p0 * static_cast<double>(n_samples);
  if (std::abs(seeds - std::round(seeds)) > 1e-9 || std::round(seeds) < 1.0)
    throw Error(Errc::config, "p0 * n_samples must be a positive integer");
  if (seeds_per_level() * chain_len != n_samples)
    throw Error(Errc::config, "chains must refill the level: p0 * n_samples * chain_len == n_samples");
}

std::size_t SusConfig::seeds_per_level() const {
  return static_cast<std::size_t>(std::llround(p0 * static_cast<double>(n_samples)));
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::reached_zero: return "reached_zero";
    case Termination::max_levels: return "max_levels";
    case Termination::stalled: return "stalled";
  }
  return "unknown";
}

std::vector<double> SusResult::conditional_estimates() const {
  std::vector<double> out;
  out.reserve(levels.size());
  for (const auto& l : levels) out.push_back(l.conditional_estimate);
  return out;
}

double select_threshold(std::span<const double> lsf_values, double p0) {
  if (lsf_values.empty()) throw Error(Errc::invalid_argument, "select_threshold: no values");
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error(Errc::invalid_argument, "select_threshold: p0 must lie in (0, 1)");
  const std::size_t k = std::max<std::size_t>(1, level_seed_count(p0, lsf_values.size()));
  std::vector<double> v(lsf_values.begin(), lsf_values.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
  const double a = v[k - 1];
  return a <= 0.0 ? 0.0 : a;
}

ChainStep mm_chain_step(const UPoint& current, double current_value, const LimitState& lsf,
                        double threshold, double spread, Rng& rng) {
  UPoint candidate = current;
  std::size_t accepted = 0;
  bool changed = false;
  for (std::size_t k = 0; k < current.size(); ++k) {
    const double x = current[k];
    const double proposal = x + spread * rng.normal();
    // Ratio of standard normal densities phi(proposal) / phi(x).
    const double log_ratio = 0.5 * (x * x - proposal * proposal);
    if (log_ratio >= 0.0 || rng.uniform() < std::exp(log_ratio)) {
      candidate[k] = proposal;
      ++accepted;
      changed = changed || proposal != x;
    }
  }
  if (!changed) return {current, current_value, accepted, false, false};
  const double v = lsf(candidate);
  if (v < threshold) return {std::move(candidate), v, accepted, true, true};
  return {current, current_value, accepted, false, true};
}

SusResult run_sus(const LimitState& lsf, const SusConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_samples;
  const std::size_t dim = lsf.dim();
  const std::size_t n_seeds = cfg.seeds_per_level();

  SusResult result;
  std::vector<UPoint> population(n, UPoint(dim));
  std::vector<double> values(n);
  {
    Rng rng(derive_seed(cfg.seed, {0, 0}));
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& x : population[i]) x = rng.normal();
      values[i] = lsf(population[i]);
    }
  }
  result.total_evals = n;
  result.initial_samples = population;
  result.initial_values = values;

  auto finish = [&](Termination why) {
    SusLevel last;
    last.index = result.levels.size() + 1;
    last.threshold = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i] < 0.0) {
        last.samples.push_back(population[i]);
        last.values.push_back(values[i]);
      }
    }
    last.conditional_estimate = static_cast<double>(last.samples.size()) / static_cast<double>(n);
    result.levels.push_back(std::move(last));
    result.terminated = why;
    result.p_hat = 1.0;
    for (const auto& l : result.levels) result.p_hat *= l.conditional_estimate;
    return result;
  };

  double previous = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(n);
  for (std::size_t level = 1;; ++level) {
    const double a = select_threshold(values, cfg.p0);
    if (a <= 0.0) return finish(Termination::reached_zero);
    if (a >= previous) return finish(Termination::stalled);
    if (level > cfg.max_levels) return finish(Termination::max_levels);
    previous = a;

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
      return values[l] < values[r] || (values[l] == values[r] && l < r);
    });

    // Domain {g <= a}: the quantile seed itself belongs to the level.
    const double bound = std::nextafter(a, std::numeric_limits<double>::infinity());
    SusLevel rec;
    rec.index = level;
    rec.threshold = a;
    rec.conditional_estimate = static_cast<double>(n_seeds) / static_cast<double>(n);
    rec.samples.reserve(n);
    rec.values.reserve(n);
    std::size_t steps = 0;
    std::size_t moves = 0;
    for (std::size_t c = 0; c < n_seeds; ++c) {
      Rng rng(derive_seed(cfg.seed, {level, c + 1}));
      UPoint u = population[order[c]];
      double v = values[order[c]];
      rec.samples.push_back(u);
      rec.values.push_back(v);
      for (std::size_t s = 1; s < cfg.chain_len; ++s) {
        ChainStep step = mm_chain_step(u, v, lsf, bound, cfg.proposal_spread, rng);
        result.total_evals += step.evaluated ? 1 : 0;
        ++steps;
        if (step.moved) {
          ++moves;
          u = std::move(step.point);
          v = step.value;
        }
        rec.samples.push_back(u);
        rec.values.push_back(v);
      }
    }
    rec.chain_acceptance_rate = steps ? static_cast<double>(moves) / static_cast<double>(steps) : 0.0;
    population = rec.samples;
    values = rec.values;
    result.levels.push_back(std::move(rec));
  }
}

}  // namespace susbench
