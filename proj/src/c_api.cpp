#include "susbench/susbench.h"

#include <cstring>
#include <exception>
#include <map>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "susbench/catalog.hpp"
#include "susbench/crude_mc.hpp"
#include "susbench/diagnostics.hpp"
#include "susbench/error.hpp"
#include "susbench/form_sorm.hpp"
#include "susbench/special_fn.hpp"
#include "susbench/subset_sim.hpp"

using namespace susbench;

struct sb_lsf {
  LimitState lsf;
};

struct sb_sus_result {
  SusResult result;
  std::size_t dim;
};

struct sb_beta_points {
  BetaSearch search;
};

struct sb_ensemble {
  RunEnsemble ensemble;
  std::size_t dim;
};

struct sb_normality {
  NormalityReport report;
};

struct sb_cov_report {
  CovReport report;
};

namespace {

thread_local std::string g_last_error;

sb_status to_status(Errc e) {
  switch (e) {
    case Errc::invalid_argument: return SB_INVALID_ARGUMENT;
    case Errc::domain: return SB_DOMAIN_ERROR;
    case Errc::config: return SB_CONFIG_ERROR;
    case Errc::unknown_lsf: return SB_UNKNOWN_LSF;
    case Errc::degenerate: return SB_DEGENERATE;
    case Errc::insufficient_data: return SB_INSUFFICIENT_DATA;
    case Errc::runtime: return SB_RUNTIME_ERROR;
  }
  return SB_RUNTIME_ERROR;
}

sb_status fail(sb_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class F>
sb_status guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SB_RUNTIME_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(SB_RUNTIME_ERROR, e.what());
  }
}

#define SB_REQUIRE(cond)                                                      \
  do {                                                                        \
    if (!(cond)) return fail(SB_INVALID_ARGUMENT, "invalid argument: " #cond); \
  } while (0)

SusConfig from_c(const sb_sus_config& c) {
  SusConfig cfg;
  cfg.n_samples = c.n_samples;
  cfg.p0 = c.p0;
  cfg.chain_len = c.chain_len;
  cfg.proposal_spread = c.proposal_spread;
  cfg.max_levels = c.max_levels;
  cfg.seed = c.seed;
  return cfg;
}

sb_termination to_c(Termination t) {
  switch (t) {
    case Termination::reached_zero: return SB_REACHED_ZERO;
    case Termination::max_levels: return SB_MAX_LEVELS;
    case Termination::stalled: return SB_STALLED;
  }
  return SB_STALLED;
}

std::vector<UPoint> points_from(const double* coords, std::size_t n, std::size_t dim) {
  std::vector<UPoint> out(n, UPoint(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dim; ++k) out[i][k] = coords[i * dim + k];
  return out;
}

void copy_moments(const Moments& m, sb_moments* out) {
  if (!out) return;
  out->mean = m.mean;
  out->sd = m.sd;
  out->skewness = m.skewness;
  out->excess_kurtosis = m.excess_kurtosis;
}

}  // namespace

extern "C" {

const char* sb_status_name(sb_status status) {
  switch (status) {
    case SB_OK: return "ok";
    case SB_INVALID_ARGUMENT: return "invalid argument";
    case SB_DOMAIN_ERROR: return "domain error";
    case SB_CONFIG_ERROR: return "configuration error";
    case SB_UNKNOWN_LSF: return "unknown limit state";
    case SB_DEGENERATE: return "degenerate input";
    case SB_INSUFFICIENT_DATA: return "insufficient data";
    case SB_RUNTIME_ERROR: return "runtime error";
    case SB_NOT_AVAILABLE: return "not available";
  }
  return "unknown status";
}

const char* sb_last_error_message(void) { return g_last_error.c_str(); }

double sb_phi_cdf(double x) { return phi_cdf(x); }

sb_status sb_phi_inv(double p, double* out) {
  SB_REQUIRE(out);
  return guarded([&] {
    *out = phi_inv(p);
    return SB_OK;
  });
}

sb_status sb_bessel_k0(double z, double* out) {
  SB_REQUIRE(out);
  return guarded([&] {
    *out = bessel_k0(z);
    return SB_OK;
  });
}

sb_status sb_product_k0_formula(double beta, double* out) {
  SB_REQUIRE(out);
  return guarded([&] {
    *out = product_k0_formula(beta);
    return SB_OK;
  });
}

sb_status sb_mills_tail_equiv(double beta, double* out) {
  SB_REQUIRE(out);
  return guarded([&] {
    *out = mills_tail_equiv(beta);
    return SB_OK;
  });
}

size_t sb_catalog_count(void) { return catalog_names().size(); }

const char* sb_catalog_name(size_t index) {
  const auto& names = catalog_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

sb_status sb_lsf_create(const char* name, const char* const* keys, const double* values,
                        size_t n_params, sb_lsf** out) {
  SB_REQUIRE(name && out);
  SB_REQUIRE(n_params == 0 || (keys && values));
  return guarded([&] {
    std::map<std::string, double> params;
    for (std::size_t i = 0; i < n_params; ++i) {
      if (!keys[i]) return fail(SB_INVALID_ARGUMENT, "null parameter key");
      params[keys[i]] = values[i];
    }
    *out = new sb_lsf{make_lsf(name, params)};
    return SB_OK;
  });
}

void sb_lsf_destroy(sb_lsf* lsf) { delete lsf; }

const char* sb_lsf_name(const sb_lsf* lsf) { return lsf ? lsf->lsf.name().c_str() : nullptr; }

size_t sb_lsf_dim(const sb_lsf* lsf) { return lsf ? lsf->lsf.dim() : 0; }

sb_status sb_lsf_param(const sb_lsf* lsf, const char* key, double* out) {
  SB_REQUIRE(lsf && key && out);
  const auto& p = lsf->lsf.params();
  const auto it = p.find(key);
  if (it == p.end()) return fail(SB_NOT_AVAILABLE, std::string("no parameter '") + key + "'");
  *out = it->second;
  return SB_OK;
}

sb_status sb_lsf_evaluate(const sb_lsf* lsf, const double* u, double* out) {
  SB_REQUIRE(lsf && u && out);
  return guarded([&] {
    *out = lsf->lsf(std::span<const double>(u, lsf->lsf.dim()));
    return SB_OK;
  });
}

uint64_t sb_lsf_evaluations(const sb_lsf* lsf) { return lsf ? lsf->lsf.evaluations() : 0; }

sb_status sb_lsf_reference(const sb_lsf* lsf, double* probability) {
  SB_REQUIRE(lsf && probability);
  return guarded([&] {
    const auto ref = reference_probability(lsf->lsf);
    if (!ref) return fail(SB_NOT_AVAILABLE, "no reference probability for '" + lsf->lsf.name() + "'");
    *probability = ref->probability;
    return SB_OK;
  });
}

double sb_tail_to_x(double u2) { return tail_to_x(u2, TailTransform::standard()); }

void sb_sus_config_default(sb_sus_config* cfg) {
  if (!cfg) return;
  const SusConfig d;
  cfg->n_samples = d.n_samples;
  cfg->p0 = d.p0;
  cfg->chain_len = d.chain_len;
  cfg->proposal_spread = d.proposal_spread;
  cfg->max_levels = d.max_levels;
  cfg->seed = d.seed;
}

sb_status sb_sus_run(const sb_lsf* lsf, const sb_sus_config* cfg, sb_sus_result** out) {
  SB_REQUIRE(lsf && cfg && out);
  return guarded([&] {
    *out = new sb_sus_result{run_sus(lsf->lsf, from_c(*cfg)), lsf->lsf.dim()};
    return SB_OK;
  });
}

void sb_sus_result_destroy(sb_sus_result* result) { delete result; }

double sb_sus_p_hat(const sb_sus_result* result) { return result ? result->result.p_hat : 0.0; }

uint64_t sb_sus_total_evals(const sb_sus_result* result) { return result ? result->result.total_evals : 0; }

sb_termination sb_sus_termination(const sb_sus_result* result) {
  return result ? to_c(result->result.terminated) : SB_STALLED;
}

size_t sb_sus_level_count(const sb_sus_result* result) { return result ? result->result.levels.size() : 0; }

sb_status sb_sus_level(const sb_sus_result* result, size_t level, sb_sus_level_info* out) {
  SB_REQUIRE(result && out);
  SB_REQUIRE(level >= 1 && level <= result->result.levels.size());
  const SusLevel& l = result->result.levels[level - 1];
  out->index = l.index;
  out->threshold = l.threshold;
  out->conditional_estimate = l.conditional_estimate;
  out->chain_acceptance_rate = l.chain_acceptance_rate;
  out->n_samples = l.samples.size();
  return SB_OK;
}

size_t sb_sus_population_size(const sb_sus_result* result, size_t population) {
  if (!result) return 0;
  if (population == 0) return result->result.initial_samples.size();
  if (population > result->result.levels.size()) return 0;
  return result->result.levels[population - 1].samples.size();
}

sb_status sb_sus_population(const sb_sus_result* result, size_t population, double* coords,
                            double* values) {
  SB_REQUIRE(result);
  SB_REQUIRE(population <= result->result.levels.size());
  const auto& pts = population == 0 ? result->result.initial_samples
                                    : result->result.levels[population - 1].samples;
  const auto& vals = population == 0 ? result->result.initial_values
                                      : result->result.levels[population - 1].values;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (coords) std::memcpy(coords + i * result->dim, pts[i].data(), result->dim * sizeof(double));
    if (values) values[i] = vals[i];
  }
  return SB_OK;
}

sb_status sb_select_threshold(const double* values, size_t n, double p0, double* out) {
  SB_REQUIRE(values && out);
  return guarded([&] {
    *out = select_threshold(std::span<const double>(values, n), p0);
    return SB_OK;
  });
}

sb_status sb_mc_run(const sb_lsf* lsf, uint64_t n, uint64_t seed, size_t keep, double* failure_coords,
                    size_t* n_kept, sb_mc_result* out) {
  SB_REQUIRE(lsf && out);
  SB_REQUIRE(keep == 0 || failure_coords);
  return guarded([&] {
    const McResult r = run_mc(lsf->lsf, n, seed, keep);
    out->p_hat = r.p_hat;
    out->n = r.n;
    out->failures = r.failures;
    out->cov_defined = r.cov_hat.has_value();
    out->cov_hat = r.cov_hat.value_or(0.0);
    const std::size_t dim = lsf->lsf.dim();
    for (std::size_t i = 0; i < r.failure_points.size(); ++i)
      std::memcpy(failure_coords + i * dim, r.failure_points[i].data(), dim * sizeof(double));
    if (n_kept) *n_kept = r.failure_points.size();
    return SB_OK;
  });
}

sb_status sb_find_beta_points(const sb_lsf* lsf, const double* starts, size_t n_starts,
                              sb_beta_points** out) {
  SB_REQUIRE(lsf && out);
  SB_REQUIRE(starts || n_starts == 0);
  return guarded([&] {
    const std::size_t dim = lsf->lsf.dim();
    const auto s = starts ? points_from(starts, n_starts, dim) : default_starts(dim);
    *out = new sb_beta_points{find_beta_points(lsf->lsf, s)};
    return SB_OK;
  });
}

void sb_beta_points_destroy(sb_beta_points* points) { delete points; }

size_t sb_beta_points_count(const sb_beta_points* points) { return points ? points->search.points.size() : 0; }

size_t sb_beta_points_starts_failed(const sb_beta_points* points) {
  if (!points) return 0;
  std::size_t n = 0;
  for (const auto& s : points->search.starts) n += s.converged ? 0 : 1;
  return n;
}

sb_status sb_beta_point(const sb_beta_points* points, size_t index, double* location,
                        sb_beta_point_info* info) {
  SB_REQUIRE(points && index < points->search.points.size());
  const BetaPoint& bp = points->search.points[index];
  if (location) std::memcpy(location, bp.location.data(), bp.location.size() * sizeof(double));
  if (info) {
    info->beta = bp.beta;
    info->converged = bp.converged;
    info->iterations = bp.iterations;
  }
  return SB_OK;
}

sb_status sb_sorm_correction(const sb_lsf* lsf, const sb_beta_points* points, size_t index,
                             sb_sorm_factor* out) {
  SB_REQUIRE(lsf && points && out && index < points->search.points.size());
  return guarded([&] {
    const SormFactor f = sorm_correction(lsf->lsf, points->search.points[index]);
    out->det_value = f.det_value;
    out->correction = f.correction;
    out->probability = f.probability;
    return SB_OK;
  });
}

sb_status sb_fit_asymptotic(const double* betas, const double* p, size_t n, int pin_b_zero,
                            sb_asymptotic_fit* out) {
  SB_REQUIRE(out && (n == 0 || (betas && p)));
  return guarded([&] {
    const AsymptoticFit f = fit_asymptotic(std::span<const double>(betas, n), std::span<const double>(p, n),
                                           pin_b_zero != 0);
    out->c = f.c;
    out->b = f.b;
    out->residual = f.residual;
    out->b_pinned = f.b_pinned;
    return SB_OK;
  });
}

uint64_t sb_ensemble_run_seed(uint64_t master, size_t run) { return ensemble_run_seed(master, run); }

sb_status sb_ensemble_run(const sb_lsf* lsf, const sb_sus_config* cfg, size_t n_runs, unsigned threads,
                          sb_ensemble** out) {
  SB_REQUIRE(lsf && cfg && out);
  return guarded([&] {
    *out = new sb_ensemble{run_ensemble(lsf->lsf, from_c(*cfg), n_runs, threads), lsf->lsf.dim()};
    return SB_OK;
  });
}

void sb_ensemble_destroy(sb_ensemble* ensemble) { delete ensemble; }

size_t sb_ensemble_size(const sb_ensemble* ensemble) { return ensemble ? ensemble->ensemble.size() : 0; }

sb_status sb_ensemble_run_info(const sb_ensemble* ensemble, size_t run, sb_run_info* out) {
  SB_REQUIRE(ensemble && out && run < ensemble->ensemble.size());
  const RunEnsemble& e = ensemble->ensemble;
  out->seed = e.seeds[run];
  out->estimate = e.estimates[run];
  out->levels = e.per_run_levels[run];
  out->modes = e.per_run_modes[run];
  out->total_evals = e.total_evals[run];
  out->terminated = to_c(e.terminated[run]);
  return SB_OK;
}

sb_status sb_ensemble_conditional(const sb_ensemble* ensemble, size_t run, double* out) {
  SB_REQUIRE(ensemble && out && run < ensemble->ensemble.size());
  const auto& c = ensemble->ensemble.per_run_conditional[run];
  std::copy(c.begin(), c.end(), out);
  return SB_OK;
}

sb_status sb_ensemble_centroid(const sb_ensemble* ensemble, size_t run, double* out) {
  SB_REQUIRE(ensemble && out && run < ensemble->ensemble.size());
  const auto& c = ensemble->ensemble.dominant_centroids[run];
  if (c.empty()) return fail(SB_NOT_AVAILABLE, "run produced no failing samples");
  std::copy(c.begin(), c.end(), out);
  return SB_OK;
}

sb_status sb_normality_report(const double* estimates, size_t n, sb_normality** out) {
  SB_REQUIRE(out && (estimates || n == 0));
  return guarded([&] {
    *out = new sb_normality{normality_report(std::span<const double>(estimates, n))};
    return SB_OK;
  });
}

void sb_normality_destroy(sb_normality* report) { delete report; }

void sb_normality_moments(const sb_normality* report, sb_moments* raw, sb_moments* log10) {
  if (!report) return;
  copy_moments(report->report.raw, raw);
  copy_moments(report->report.log10, log10);
}

void sb_normality_qq_corr(const sb_normality* report, double* raw, double* log10) {
  if (!report) return;
  if (raw) *raw = report->report.qq_corr_raw;
  if (log10) *log10 = report->report.qq_corr_log;
}

size_t sb_normality_zero_estimates(const sb_normality* report) {
  return report ? report->report.zero_estimates : 0;
}

size_t sb_normality_qq_count(const sb_normality* report, int log_scale) {
  if (!report) return 0;
  return log_scale ? report->report.qq_log.size() : report->report.qq_raw.size();
}

void sb_normality_qq(const sb_normality* report, int log_scale, double* theoretical, double* sample) {
  if (!report) return;
  const auto& qq = log_scale ? report->report.qq_log : report->report.qq_raw;
  for (std::size_t i = 0; i < qq.size(); ++i) {
    if (theoretical) theoretical[i] = qq[i].theoretical;
    if (sample) sample[i] = qq[i].sample;
  }
}

sb_status sb_delta_cov(const double* flat_levels, const size_t* level_counts, size_t n_runs,
                       const double* estimates, size_t n_estimates, sb_cov_report** out) {
  SB_REQUIRE(out && (n_runs == 0 || (flat_levels && level_counts)));
  SB_REQUIRE(estimates || n_estimates == 0);
  return guarded([&] {
    std::vector<std::vector<double>> runs(n_runs);
    std::size_t offset = 0;
    for (std::size_t r = 0; r < n_runs; ++r) {
      runs[r].assign(flat_levels + offset, flat_levels + offset + level_counts[r]);
      offset += level_counts[r];
    }
    *out = new sb_cov_report{delta_cov(runs, std::span<const double>(estimates, n_estimates))};
    return SB_OK;
  });
}

void sb_cov_report_destroy(sb_cov_report* report) { delete report; }

size_t sb_cov_level_count(const sb_cov_report* report) { return report ? report->report.level_count : 0; }

void sb_cov_summary(const sb_cov_report* report, double* combined_cov, double* empirical_cov,
                    size_t* runs_used, size_t* runs_excluded) {
  if (!report) return;
  if (combined_cov) *combined_cov = report->report.combined_cov;
  if (empirical_cov) *empirical_cov = report->report.empirical_cov;
  if (runs_used) *runs_used = report->report.runs_used;
  if (runs_excluded) *runs_excluded = report->report.runs_excluded;
}

void sb_cov_per_level(const sb_cov_report* report, double* cov) {
  if (!report || !cov) return;
  std::copy(report->report.per_level_cov.begin(), report->report.per_level_cov.end(), cov);
}

void sb_cov_correlation(const sb_cov_report* report, double* corr) {
  if (!report || !corr) return;
  const std::size_t n = report->report.level_count;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) corr[i * n + j] = report->report.per_level_corr[i][j];
}

sb_status sb_lognormal_ci(const double* estimates, size_t n, double level, double* lower, double* upper) {
  SB_REQUIRE(lower && upper && (estimates || n == 0));
  return guarded([&] {
    const auto [lo, hi] = lognormal_ci(std::span<const double>(estimates, n), level);
    *lower = lo;
    *upper = hi;
    return SB_OK;
  });
}

sb_status sb_count_modes(const sb_lsf* lsf, const double* coords, size_t n_points, size_t* out) {
  SB_REQUIRE(lsf && out && (coords || n_points == 0));
  return guarded([&] {
    *out = count_modes(points_from(coords, n_points, lsf->lsf.dim()), lsf->lsf);
    return SB_OK;
  });
}

sb_status sb_dominant_cluster(const double* coords, size_t n_points, size_t dim, double link,
                              double* centroid, size_t* size) {
  SB_REQUIRE(centroid && size && dim > 0 && (coords || n_points == 0));
  SB_REQUIRE(link > 0.0);
  return guarded([&] {
    if (n_points == 0) return fail(SB_NOT_AVAILABLE, "no points to cluster");
    const Cluster c = dominant_cluster(points_from(coords, n_points, dim), link);
    std::copy(c.centroid.begin(), c.centroid.end(), centroid);
    *size = c.size;
    return SB_OK;
  });
}

sb_status sb_safe_set_components(const sb_lsf* lsf, double lo, double hi, size_t grid, size_t* out) {
  SB_REQUIRE(lsf && out);
  return guarded([&] {
    *out = safe_set_components(lsf->lsf, lo, hi, grid);
    return SB_OK;
  });
}

}  // extern "C"
