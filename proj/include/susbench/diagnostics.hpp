#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "susbench/limit_state.hpp"
#include "susbench/subset_sim.hpp"

namespace susbench {

/// Repeated independent subset simulation runs of one problem.
struct RunEnsemble {
  std::vector<double> estimates;
  std::vector<std::size_t> per_run_levels;
  std::vector<std::size_t> per_run_modes;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> per_run_conditional;
  std::vector<Termination> terminated;
  std::vector<std::uint64_t> total_evals;
  std::vector<UPoint> dominant_centroids;  // empty point when a run found no failures

  std::size_t size() const { return estimates.size(); }
};

/// Seed of run `run` in an ensemble with master seed `master`.
std::uint64_t ensemble_run_seed(std::uint64_t master, std::size_t run);

/// Runs n_runs subset simulations with seeds derived from cfg.seed. Runs are
/// spread over `threads` workers (0: hardware concurrency); results do not
/// depend on the thread count.
RunEnsemble run_ensemble(const LimitState& lsf, const SusConfig& cfg, std::size_t n_runs,
                         unsigned threads = 0);

struct CovReport {
  std::vector<double> per_level_cov;
  std::vector<std::vector<double>> per_level_corr;
  double combined_cov = 0.0;
  double empirical_cov = 0.0;
  std::size_t level_count = 0;
  std::size_t runs_used = 0;
  std::size_t runs_excluded = 0;
};

/// Delta-method c.o.v. of a product of per-level estimates:
/// combined_cov^2 = sum_ij cov_i cov_j corr_ij. Only runs whose level count
/// equals the most common one enter the per-level statistics. A level with
/// zero spread contributes zero and is uncorrelated with the others.
CovReport delta_cov(const std::vector<std::vector<double>>& per_run_levels,
                    std::span<const double> estimates);

struct Moments {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

Moments moments(std::span<const double> x);

struct QqPoint {
  double theoretical;
  double sample;
};

struct NormalityReport {
  Moments raw;
  Moments log10;
  std::vector<QqPoint> qq_raw;
  std::vector<QqPoint> qq_log;
  double qq_corr_raw = 0.0;
  double qq_corr_log = 0.0;
  std::size_t zero_estimates = 0;
};

/// Standardized sample quantiles against normal quantiles at (i - 0.5) / n.
std::vector<QqPoint> qq_pairs(std::span<const double> x);
double qq_correlation(std::span<const QqPoint> qq);

/// Moments and qq diagnostics of raw and decimal-log estimates. Zero
/// estimates are left out of the log analysis and counted.
NormalityReport normality_report(std::span<const double> estimates);

/// Interval from mean +/- z sd of the decimal logs, z = Phi^-1((1 + level)/2).
std::pair<double, double> lognormal_ci(std::span<const double> estimates, double level);

/// Cluster labels by single linkage: points closer than `link` share a cluster.
std::vector<std::size_t> single_linkage(std::span<const UPoint> points, double link);

struct Cluster {
  UPoint centroid;
  std::size_t size = 0;
};

/// Largest single-linkage cluster (ties: lowest first index).
Cluster dominant_cluster(std::span<const UPoint> points, double link = 1.0);

/// Number of failure-mode clusters among the failing points of `samples`:
/// coordinate sign patterns for quadrant-symmetric problems, single linkage
/// with link distance 1 otherwise.
std::size_t count_modes(std::span<const UPoint> samples, const LimitState& lsf);

/// Connected components of the safe set {g >= 0} on an n x n grid over
/// [lo, hi]^2 (4-neighbour flood fill).
std::size_t safe_set_components(const LimitState& lsf, double lo, double hi, std::size_t n);

/// Angle in radians between two points seen from the origin.
double angle_between(std::span<const double> a, std::span<const double> b);

}  // namespace susbench
