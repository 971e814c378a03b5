#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csv.hpp"
#include "susbench/susbench.h"

namespace sbcli {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(sb_status s) {
  switch (s) {
    case SB_INVALID_ARGUMENT:
    case SB_CONFIG_ERROR: return kBadArguments;
    case SB_UNKNOWN_LSF: return kUnknownLsf;
    default: return kRuntimeFailure;
  }
}

void check(sb_status s, const std::string& what) {
  if (s == SB_OK) return;
  throw Failure{exit_code_for(s), what + ": " + sb_status_name(s) + " (" + sb_last_error_message() + ")"};
}

template <class T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};
using Lsf = std::unique_ptr<sb_lsf, Deleter<sb_lsf, sb_lsf_destroy>>;
using SusResult = std::unique_ptr<sb_sus_result, Deleter<sb_sus_result, sb_sus_result_destroy>>;
using Ensemble = std::unique_ptr<sb_ensemble, Deleter<sb_ensemble, sb_ensemble_destroy>>;
using BetaPoints = std::unique_ptr<sb_beta_points, Deleter<sb_beta_points, sb_beta_points_destroy>>;
using Normality = std::unique_ptr<sb_normality, Deleter<sb_normality, sb_normality_destroy>>;
using CovReport = std::unique_ptr<sb_cov_report, Deleter<sb_cov_report, sb_cov_report_destroy>>;

struct Options {
  std::string lsf = "product";
  std::vector<std::string> params;
  std::string method = "sus";
  std::size_t runs = 1;
  std::optional<std::uint64_t> samples;
  double p0 = 0.1;
  std::size_t chain_len = 10;
  double spread = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
  // fit
  std::vector<double> betas;
  std::string input;
  bool pin_b = false;
  // diagnose
  std::string in;
};

Lsf make_lsf(const std::string& name, const std::vector<std::string>& params) {
  std::vector<std::string> keys;
  std::vector<double> values;
  for (const auto& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Failure{kBadArguments, "--param expects key=value, got '" + kv + "'"};
    std::vector<double> v;
    try {
      v = split_numbers(std::string_view(kv).substr(eq + 1), ';');
    } catch (const std::exception&) {
      v.clear();
    }
    if (v.size() != 1) throw Failure{kBadArguments, "--param value is not a number: '" + kv + "'"};
    keys.push_back(kv.substr(0, eq));
    values.push_back(v[0]);
  }
  std::vector<const char*> key_ptrs;
  for (const auto& k : keys) key_ptrs.push_back(k.c_str());
  sb_lsf* raw = nullptr;
  check(sb_lsf_create(name.c_str(), key_ptrs.data(), values.data(), values.size(), &raw), "limit state '" + name + "'");
  return Lsf(raw);
}

sb_sus_config sus_config(const Options& o) {
  sb_sus_config cfg;
  sb_sus_config_default(&cfg);
  if (o.samples) cfg.n_samples = static_cast<std::size_t>(*o.samples);
  cfg.p0 = o.p0;
  cfg.chain_len = o.chain_len;
  cfg.proposal_spread = o.spread;
  cfg.seed = o.seed;
  return cfg;
}

std::string param_string(const sb_lsf* lsf, const std::string& name) {
  std::string out;
  for (const char* key : {"beta", "d"}) {
    double v = 0.0;
    if (sb_lsf_param(lsf, key, &v) == SB_OK) {
      if (!out.empty()) out += ';';
      out += std::string(key) + "=" + fmt(v);
    }
  }
  (void)name;
  return out;
}

const char* termination_name(sb_termination t) {
  switch (t) {
    case SB_REACHED_ZERO: return "reached_zero";
    case SB_MAX_LEVELS: return "max_levels";
    case SB_STALLED: return "stalled";
  }
  return "unknown";
}

// Output destination: a file when a path is given, otherwise `fallback`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      os_ = &fallback;
      return;
    }
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw Failure{kRuntimeFailure, "cannot write '" + path + "'"};
    os_ = &file_;
  }
  std::ostream& stream() { return *os_; }
  void finish(const std::string& path) {
    os_->flush();
    if (!*os_) throw Failure{kRuntimeFailure, "write failed for '" + (path.empty() ? "stdout" : path) + "'"};
  }

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

void write_file(const std::filesystem::path& path, const std::function<void(CsvWriter&)>& body) {
  Sink sink(path.string(), std::cout);
  CsvWriter w(sink.stream());
  body(w);
  sink.finish(path.string());
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

std::optional<double> log10_sd(const std::vector<double>& v) {
  std::vector<double> logs;
  for (double x : v)
    if (x > 0.0) logs.push_back(std::log10(x));
  if (logs.size() < 2) return std::nullopt;
  const double m = mean(logs);
  double ss = 0.0;
  for (double x : logs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(logs.size() - 1));
}

std::optional<double> combined_cov(const std::vector<std::vector<double>>& conditional,
                                   const std::vector<double>& estimates) {
  std::vector<double> flat;
  std::vector<std::size_t> counts;
  for (const auto& c : conditional) {
    flat.insert(flat.end(), c.begin(), c.end());
    counts.push_back(c.size());
  }
  sb_cov_report* raw = nullptr;
  if (sb_delta_cov(flat.data(), counts.data(), counts.size(), estimates.data(), estimates.size(), &raw) != SB_OK)
    return std::nullopt;
  CovReport rep(raw);
  double comb = 0.0, emp = 0.0;
  std::size_t used = 0, excluded = 0;
  sb_cov_summary(rep.get(), &comb, &emp, &used, &excluded);
  return comb;
}

std::optional<double> reference_of(const sb_lsf* lsf) {
  double p = 0.0;
  if (sb_lsf_reference(lsf, &p) == SB_OK) return p;
  return std::nullopt;
}

struct RunTable {
  std::vector<double> estimates;
  std::vector<std::vector<double>> conditional;
  std::vector<std::size_t> modes;
  std::vector<std::optional<std::pair<double, double>>> centroids;
  std::vector<std::uint64_t> seeds;
};

const std::vector<std::string> kRunHeader{"run", "seed", "estimate", "levels", "total_evals",
                                          "modes", "terminated", "conditional_estimates"};

RunTable run_sus_ensemble(const sb_lsf* lsf, const sb_sus_config& cfg, std::size_t runs, CsvWriter& w) {
  sb_ensemble* raw = nullptr;
  check(sb_ensemble_run(lsf, &cfg, runs, 0, &raw), "subset simulation");
  Ensemble ens(raw);
  RunTable t;
  w.row(kRunHeader);
  const std::size_t dim = sb_lsf_dim(lsf);
  for (std::size_t r = 0; r < sb_ensemble_size(ens.get()); ++r) {
    sb_run_info info;
    check(sb_ensemble_run_info(ens.get(), r, &info), "run info");
    std::vector<double> cond(info.levels);
    check(sb_ensemble_conditional(ens.get(), r, cond.data()), "conditional estimates");
    std::vector<double> c(dim);
    if (dim == 2 && sb_ensemble_centroid(ens.get(), r, c.data()) == SB_OK)
      t.centroids.emplace_back(std::make_pair(c[0], c[1]));
    else
      t.centroids.emplace_back(std::nullopt);
    w.row({fmt(std::uint64_t{r}), fmt(info.seed), fmt(info.estimate), fmt(std::uint64_t{info.levels}),
           fmt(info.total_evals), fmt(std::uint64_t{info.modes}), termination_name(info.terminated),
           join(cond, ';')});
    t.estimates.push_back(info.estimate);
    t.conditional.push_back(std::move(cond));
    t.modes.push_back(info.modes);
    t.seeds.push_back(info.seed);
  }
  return t;
}

RunTable run_mc_ensemble(const sb_lsf* lsf, std::uint64_t n, std::uint64_t seed, std::size_t runs, CsvWriter& w) {
  RunTable t;
  w.row(kRunHeader);
  const std::size_t dim = sb_lsf_dim(lsf);
  constexpr std::size_t keep = 1000;
  std::vector<double> kept(keep * dim);
  for (std::size_t r = 0; r < runs; ++r) {
    const std::uint64_t s = sb_ensemble_run_seed(seed, r);
    sb_mc_result res;
    std::size_t n_kept = 0;
    check(sb_mc_run(lsf, n, s, keep, kept.data(), &n_kept, &res), "monte carlo");
    std::size_t modes = 0;
    check(sb_count_modes(lsf, kept.data(), n_kept, &modes), "mode count");
    w.row({fmt(std::uint64_t{r}), fmt(s), fmt(res.p_hat), "1", fmt(res.n), fmt(std::uint64_t{modes}), "complete",
           fmt(res.p_hat)});
    t.estimates.push_back(res.p_hat);
    t.conditional.push_back({res.p_hat});
    t.modes.push_back(modes);
    t.seeds.push_back(s);
    t.centroids.emplace_back(std::nullopt);
  }
  return t;
}

std::string summary_line(const RunTable& t, const std::optional<double>& reference, bool with_modes) {
  std::ostringstream os;
  os << "runs=" << t.estimates.size() << " median=" << fmt(median(t.estimates)) << " mean=" << fmt(mean(t.estimates))
     << " log10_sd=" << fmt(log10_sd(t.estimates)) << " combined_cov=" << fmt(combined_cov(t.conditional, t.estimates))
     << " reference=" << fmt(reference);
  if (with_modes) {
    std::map<std::size_t, std::size_t> hist;
    for (std::size_t k = 1; k <= 4; ++k) hist[k] = 0;
    for (std::size_t m : t.modes) ++hist[m];
    os << " modes";
    for (const auto& [k, count] : hist) os << ' ' << k << ':' << count;
  }
  return os.str();
}

struct BetaRow {
  std::vector<double> location;
  sb_beta_point_info info;
  std::optional<sb_sorm_factor> sorm;
};

std::vector<BetaRow> beta_rows(const sb_lsf* lsf, std::size_t* starts_failed) {
  sb_beta_points* raw = nullptr;
  check(sb_find_beta_points(lsf, nullptr, 0, &raw), "beta point search");
  BetaPoints bp(raw);
  if (starts_failed) *starts_failed = sb_beta_points_starts_failed(bp.get());
  std::vector<BetaRow> rows;
  for (std::size_t i = 0; i < sb_beta_points_count(bp.get()); ++i) {
    BetaRow row;
    row.location.resize(sb_lsf_dim(lsf));
    check(sb_beta_point(bp.get(), i, row.location.data(), &row.info), "beta point");
    sb_sorm_factor f;
    if (sb_sorm_correction(lsf, bp.get(), i, &f) == SB_OK) row.sorm = f;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- commands ----------------------------------------------------------

int cmd_estimate(const Options& o, std::ostream& out, std::ostream& err) {
  const Lsf lsf = make_lsf(o.lsf, o.params);
  Sink sink(o.out, out);
  std::ostream& summary = o.out.empty() ? err : out;
  CsvWriter w(sink.stream());
  std::string line;

  if (o.method == "sus") {
    const RunTable t = run_sus_ensemble(lsf.get(), sus_config(o), o.runs, w);
    line = summary_line(t, reference_of(lsf.get()), true);
  } else if (o.method == "mc") {
    const std::uint64_t n = o.samples.value_or(1000000);
    const RunTable t = run_mc_ensemble(lsf.get(), n, o.seed, o.runs, w);
    line = summary_line(t, reference_of(lsf.get()), false);
  } else if (o.method == "form" || o.method == "sorm") {
    const bool second = o.method == "sorm";
    const auto rows = beta_rows(lsf.get(), nullptr);
    std::vector<std::string> header{"point", "beta", "u1", "u2"};
    if (second) header.insert(header.end(), {"det", "correction"});
    header.push_back("probability");
    w.row(header);
    double total = 0.0;
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const double form = 0.5 * std::erfc(r.info.beta / std::sqrt(2.0));
      std::vector<std::string> cells{fmt(std::uint64_t{i + 1}), fmt(r.info.beta), fmt(r.location[0]),
                                     r.location.size() > 1 ? fmt(r.location[1]) : ""};
      if (second) {
        if (r.sorm) {
          cells.insert(cells.end(), {fmt(r.sorm->det_value), fmt(r.sorm->correction), fmt(r.sorm->probability)});
          total += r.sorm->probability;
        } else {
          cells.insert(cells.end(), {"", "", ""});
          ++invalid;
        }
      } else {
        cells.push_back(fmt(form));
        total += form;
      }
      w.row(cells);
    }
    std::vector<std::string> last(header.size());
    last[0] = "total";
    last.back() = fmt(total);
    w.row(last);
    std::ostringstream os;
    os << "points=" << rows.size() << ' ' << o.method << "_total=" << fmt(total)
       << " reference=" << fmt(reference_of(lsf.get()));
    if (invalid) os << " invalid_det=" << invalid;
    line = os.str();
  } else if (o.method == "exact") {
    const auto ref = reference_of(lsf.get());
    if (!ref) throw Failure{kRuntimeFailure, "no exact reference for '" + o.lsf + "'"};
    w.row({"lsf", "params", "probability"});
    w.row({o.lsf, param_string(lsf.get(), o.lsf), fmt(*ref)});
    line = "exact=" + fmt(*ref);
  } else {
    throw Failure{kBadArguments, "unknown method '" + o.method + "'"};
  }
  sink.finish(o.out);
  if (!o.quiet) summary << line << '\n';
  return kOk;
}

int cmd_beta_points(const Options& o, std::ostream& out, std::ostream& err) {
  const Lsf lsf = make_lsf(o.lsf, o.params);
  std::size_t failed = 0;
  const auto rows = beta_rows(lsf.get(), &failed);
  Sink sink(o.out, out);
  CsvWriter w(sink.stream());
  w.row({"point", "u1", "u2", "beta", "converged", "iterations", "det", "correction", "form_probability",
         "sorm_probability"});
  double form_total = 0.0, sorm_total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double form = 0.5 * std::erfc(r.info.beta / std::sqrt(2.0));
    form_total += form;
    if (r.sorm) sorm_total += r.sorm->probability;
    w.row({fmt(std::uint64_t{i + 1}), fmt(r.location[0]), r.location.size() > 1 ? fmt(r.location[1]) : "",
           fmt(r.info.beta), r.info.converged ? "1" : "0", fmt(std::uint64_t{r.info.iterations}),
           r.sorm ? fmt(r.sorm->det_value) : "", r.sorm ? fmt(r.sorm->correction) : "", fmt(form),
           r.sorm ? fmt(r.sorm->probability) : ""});
  }
  sink.finish(o.out);
  if (!o.quiet)
    (o.out.empty() ? err : out) << "points=" << rows.size() << " starts_failed=" << failed
                                << " form_total=" << fmt(form_total) << " sorm_total=" << fmt(sorm_total) << '\n';
  return kOk;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<double> betas, estimates;
  std::vector<std::size_t> used_runs;
  if (!o.input.empty()) {
    std::ifstream in(o.input, std::ios::binary);
    if (!in) throw Failure{kBadArguments, "cannot read '" + o.input + "'"};
    CsvTable t;
    try {
      t = parse_csv(in);
      const auto bi = t.column("beta"), ei = t.column("estimate");
      for (const auto& row : t.rows) {
        betas.push_back(split_numbers(row[bi], ';').at(0));
        estimates.push_back(split_numbers(row[ei], ';').at(0));
        used_runs.push_back(0);
      }
    } catch (const std::exception& e) {
      throw Failure{kBadArguments, "bad fit input: " + std::string(e.what())};
    }
  } else {
    if (o.betas.empty()) throw Failure{kBadArguments, "fit needs --betas or --input"};
    for (std::size_t i = 0; i < o.betas.size(); ++i) {
      std::vector<std::string> params = o.params;
      params.push_back("beta=" + fmt(o.betas[i]));
      const Lsf lsf = make_lsf(o.lsf, params);
      sb_sus_config cfg = sus_config(o);
      cfg.seed = sb_ensemble_run_seed(o.seed, 0x666974 + i);
      sb_ensemble* raw = nullptr;
      check(sb_ensemble_run(lsf.get(), &cfg, o.runs, 0, &raw), "subset simulation");
      Ensemble ens(raw);
      std::vector<double> est;
      for (std::size_t r = 0; r < o.runs; ++r) {
        sb_run_info info;
        check(sb_ensemble_run_info(ens.get(), r, &info), "run info");
        est.push_back(info.estimate);
      }
      betas.push_back(o.betas[i]);
      estimates.push_back(mean(est));
      used_runs.push_back(o.runs);
    }
  }
  sb_asymptotic_fit fit;
  check(sb_fit_asymptotic(betas.data(), estimates.data(), betas.size(), o.pin_b ? 1 : 0, &fit), "asymptotic fit");

  auto write_fit = [&](CsvWriter& w) {
    w.row({"c", "b", "residual", "b_pinned", "points"});
    w.row({fmt(fit.c), fmt(fit.b), fmt(fit.residual), fit.b_pinned ? "1" : "0", fmt(std::uint64_t{betas.size()})});
  };
  if (o.out.empty()) {
    CsvWriter w(out);
    write_fit(w);
  } else {
    write_file(o.out + "_fit.csv", write_fit);
    write_file(o.out + "_points.csv", [&](CsvWriter& w) {
      w.row({"beta", "estimate", "runs"});
      for (std::size_t i = 0; i < betas.size(); ++i)
        w.row({fmt(betas[i]), fmt(estimates[i]), fmt(std::uint64_t{used_runs[i]})});
    });
    write_file(o.out + "_curve.csv", [&](CsvWriter& w) {
      w.row({"beta", "fitted", "mills_equivalent"});
      const double lo = std::max(0.05, *std::min_element(betas.begin(), betas.end()) - 0.5);
      const double hi = *std::max_element(betas.begin(), betas.end()) + 0.5;
      const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / 0.05));
      for (std::size_t k = 0; k <= steps; ++k) {
        const double b = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps);
        const double tail = 0.5 * std::erfc(b / std::sqrt(2.0));
        w.row({fmt(b), fmt(fit.c * std::pow(b, fit.b) * tail), fmt(std::sqrt(2.0) * tail)});
      }
    });
  }
  if (!o.quiet)
    (o.out.empty() ? err : out) << "c=" << fmt(fit.c) << " b=" << fmt(fit.b) << " residual=" << fmt(fit.residual)
                                << '\n';
  return kOk;
}

int cmd_diagnose(const Options& o, std::ostream& out, std::ostream& err) {
  std::ifstream in(o.in, std::ios::binary);
  if (!in) throw Failure{kBadArguments, "cannot read '" + o.in + "'"};
  std::vector<double> estimates;
  std::vector<std::vector<double>> conditional;
  bool have_levels = false;
  try {
    const CsvTable t = parse_csv(in);
    const auto ei = t.column("estimate");
    have_levels = std::find(t.header.begin(), t.header.end(), "conditional_estimates") != t.header.end();
    const auto ci = have_levels ? t.column("conditional_estimates") : 0;
    for (const auto& row : t.rows) {
      estimates.push_back(split_numbers(row[ei], ';').at(0));
      if (have_levels) conditional.push_back(split_numbers(row[ci], ';'));
    }
  } catch (const std::exception& e) {
    throw Failure{kBadArguments, "bad estimate file: " + std::string(e.what())};
  }

  sb_normality* raw = nullptr;
  check(sb_normality_report(estimates.data(), estimates.size(), &raw), "normality report");
  Normality rep(raw);
  sb_moments m_raw, m_log;
  sb_normality_moments(rep.get(), &m_raw, &m_log);
  double qq_raw = 0.0, qq_log = 0.0;
  sb_normality_qq_corr(rep.get(), &qq_raw, &qq_log);
  const std::size_t zeros = sb_normality_zero_estimates(rep.get());
  double lo = 0.0, hi = 0.0;
  check(sb_lognormal_ci(estimates.data(), estimates.size(), 0.95, &lo, &hi), "lognormal interval");

  write_file(o.out + "_normality.csv", [&](CsvWriter& w) {
    w.row({"scale", "n", "zeros", "mean", "sd", "skewness", "excess_kurtosis", "qq_corr", "ci95_lower",
           "ci95_upper"});
    w.row({"raw", fmt(std::uint64_t{estimates.size()}), fmt(std::uint64_t{zeros}), fmt(m_raw.mean), fmt(m_raw.sd),
           fmt(m_raw.skewness), fmt(m_raw.excess_kurtosis), fmt(qq_raw), "", ""});
    w.row({"log10", fmt(std::uint64_t{estimates.size() - zeros}), fmt(std::uint64_t{zeros}), fmt(m_log.mean),
           fmt(m_log.sd), fmt(m_log.skewness), fmt(m_log.excess_kurtosis), fmt(qq_log), fmt(lo), fmt(hi)});
  });
  write_file(o.out + "_qq.csv", [&](CsvWriter& w) {
    w.row({"scale", "theoretical", "sample"});
    for (int scale = 0; scale < 2; ++scale) {
      const std::size_t n = sb_normality_qq_count(rep.get(), scale);
      std::vector<double> th(n), sa(n);
      sb_normality_qq(rep.get(), scale, th.data(), sa.data());
      for (std::size_t i = 0; i < n; ++i) w.row({scale ? "log10" : "raw", fmt(th[i]), fmt(sa[i])});
    }
  });

  std::string cov_note = " combined_cov=";
  if (have_levels) {
    std::vector<double> flat;
    std::vector<std::size_t> counts;
    for (const auto& c : conditional) {
      flat.insert(flat.end(), c.begin(), c.end());
      counts.push_back(c.size());
    }
    sb_cov_report* craw = nullptr;
    check(sb_delta_cov(flat.data(), counts.data(), counts.size(), estimates.data(), estimates.size(), &craw),
          "delta-method c.o.v.");
    CovReport cov(craw);
    const std::size_t levels = sb_cov_level_count(cov.get());
    std::vector<double> per(levels), corr(levels * levels);
    sb_cov_per_level(cov.get(), per.data());
    sb_cov_correlation(cov.get(), corr.data());
    double comb = 0.0, emp = 0.0;
    std::size_t used = 0, excluded = 0;
    sb_cov_summary(cov.get(), &comb, &emp, &used, &excluded);
    write_file(o.out + "_cov.csv", [&](CsvWriter& w) {
      std::vector<std::string> header{"level", "cov"};
      for (std::size_t j = 0; j < levels; ++j) header.push_back("corr_" + fmt(std::uint64_t{j + 1}));
      w.row(header);
      for (std::size_t i = 0; i < levels; ++i) {
        std::vector<std::string> row{fmt(std::uint64_t{i + 1}), fmt(per[i])};
        for (std::size_t j = 0; j < levels; ++j) row.push_back(fmt(corr[i * levels + j]));
        w.row(row);
      }
    });
    write_file(o.out + "_cov_summary.csv", [&](CsvWriter& w) {
      w.row({"level_count", "runs_used", "runs_excluded", "combined_cov", "empirical_cov"});
      w.row({fmt(std::uint64_t{levels}), fmt(std::uint64_t{used}), fmt(std::uint64_t{excluded}), fmt(comb),
             fmt(emp)});
    });
    cov_note += fmt(comb);
  }
  if (!o.quiet)
    out << "skewness_raw=" << fmt(m_raw.skewness) << " skewness_log10=" << fmt(m_log.skewness)
        << " qq_corr_raw=" << fmt(qq_raw) << " qq_corr_log10=" << fmt(qq_log) << cov_note << '\n';
  (void)err;
  return kOk;
}

// One catalog entry of the gallery. Throws Failure on errors.
std::vector<std::string> gallery_entry(const Options& o, const std::string& name, const std::filesystem::path& dir,
                                       std::ostream& out) {
  const Lsf lsf = make_lsf(name, {});
  sb_sus_config cfg = sus_config(o);
  RunTable t;
  write_file(dir / (name + ".csv"), [&](CsvWriter& w) { t = run_sus_ensemble(lsf.get(), cfg, o.runs, w); });

  // Every tenth point of each population of run 0.
  {
    sb_sus_config c0 = cfg;
    c0.seed = sb_ensemble_run_seed(cfg.seed, 0);
    sb_sus_result* raw = nullptr;
    check(sb_sus_run(lsf.get(), &c0, &raw), "subset simulation");
    SusResult res(raw);
    write_file(dir / (name + "_points.csv"), [&](CsvWriter& w) {
      w.row({"population", "index", "u1", "u2", "g"});
      for (std::size_t p = 0; p <= sb_sus_level_count(res.get()); ++p) {
        const std::size_t n = sb_sus_population_size(res.get(), p);
        std::vector<double> coords(2 * n), values(n);
        check(sb_sus_population(res.get(), p, coords.data(), values.data()), "population");
        for (std::size_t i = 0; i < n; i += 10)
          w.row({fmt(std::uint64_t{p}), fmt(std::uint64_t{i}), fmt(coords[2 * i]), fmt(coords[2 * i + 1]),
                 fmt(values[i])});
      }
    });
  }

  std::size_t failed_starts = 0;
  const auto rows = beta_rows(lsf.get(), &failed_starts);
  std::optional<double> sorm;
  if (!rows.empty()) {
    double s = 0.0;
    for (const auto& r : rows)
      if (r.sorm) s += r.sorm->probability;
    sorm = s;
  }

  std::optional<double> reference = reference_of(lsf.get());
  std::string kind = reference ? "exact" : "";
  if (!reference) {
    sb_mc_result mc;
    check(sb_mc_run(lsf.get(), 10000000, sb_ensemble_run_seed(cfg.seed, 0x6d63), 0, nullptr, nullptr, &mc),
          "monte carlo reference");
    if (mc.failures > 0) {
      reference = mc.p_hat;
      kind = "mc";
    }
  }

  std::size_t misdirected = 0, with_centroid = 0;
  write_file(dir / (name + "_centroids.csv"), [&](CsvWriter& w) {
    w.row({"run", "seed", "centroid_u1", "centroid_u2", "angle_to_global", "misdirected"});
    for (std::size_t r = 0; r < t.estimates.size(); ++r) {
      std::vector<std::string> row{fmt(std::uint64_t{r}), fmt(t.seeds[r]), "", "", "", ""};
      if (t.centroids[r]) {
        const auto [c1, c2] = *t.centroids[r];
        row[2] = fmt(c1);
        row[3] = fmt(c2);
        if (!rows.empty()) {
          const auto& g = rows.front().location;
          const double cosang = (c1 * g[0] + c2 * g[1]) / (std::hypot(c1, c2) * std::hypot(g[0], g[1]));
          const double angle = std::acos(std::clamp(cosang, -1.0, 1.0));
          const bool mis = angle > kPi / 4.0;
          row[4] = fmt(angle);
          row[5] = mis ? "1" : "0";
          misdirected += mis;
          ++with_centroid;
        }
      }
      w.row(row);
    }
  });

  std::string components;
  double d = 0.0;
  if (sb_lsf_param(lsf.get(), "d", &d) == SB_OK) {
    std::size_t k = 0;
    check(sb_safe_set_components(lsf.get(), -10.0, 10.0, 400, &k), "flood fill");
    components = fmt(std::uint64_t{k});
  }

  const double med = median(t.estimates);
  const auto comb = combined_cov(t.conditional, t.estimates);
  std::string flag = "-";
  std::optional<double> ratio;
  if (reference && *reference > 0.0) {
    ratio = med / *reference;
    if (!(med > 0.0) || *ratio > 10.0 || *ratio < 0.1)
      flag = "MISLEADING";
    else if (comb && std::abs(med - *reference) <= 3.0 * *comb * *reference)
      flag = "OK";
    else
      flag = "BIASED";
  }
  if (!o.quiet)
    out << name << ": median=" << fmt(med) << " reference=" << fmt(reference) << " (" << (kind.empty() ? "none" : kind)
        << ") flag=" << flag << " misdirected=" << misdirected << '/' << with_centroid << '\n';
  return {name,
          param_string(lsf.get(), name),
          fmt(std::uint64_t{t.estimates.size()}),
          fmt(med),
          fmt(mean(t.estimates)),
          fmt(log10_sd(t.estimates)),
          fmt(comb),
          fmt(reference),
          kind,
          fmt(sorm),
          fmt(ratio),
          fmt(std::uint64_t{rows.size()}),
          rows.empty() ? "" : fmt(rows.front().info.beta),
          fmt(std::uint64_t{misdirected}),
          fmt(std::uint64_t{with_centroid}),
          components,
          flag,
          ""};
}

int cmd_gallery(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw Failure{kBadArguments, "gallery needs --out DIR"};
  const std::filesystem::path dir(o.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Failure{kRuntimeFailure, "cannot create '" + o.out + "'"};
  sus_config(o);  // validated per entry by the library

  std::vector<std::vector<std::string>> summary;
  bool partial = false;
  for (std::size_t i = 0; i < sb_catalog_count(); ++i) {
    const std::string name = sb_catalog_name(i);
    try {
      summary.push_back(gallery_entry(o, name, dir, out));
    } catch (const Failure& f) {
      if (f.code == kBadArguments) throw;
      partial = true;
      err << name << ": " << f.message << '\n';
      std::vector<std::string> row(18);
      row[0] = name;
      row[16] = "FAILED";
      row[17] = f.message;
      summary.push_back(row);
    }
  }
  write_file(dir / "summary.csv", [&](CsvWriter& w) {
    w.row({"lsf", "params", "runs", "median", "mean", "log10_sd", "combined_cov", "reference", "reference_kind",
           "sorm", "median_over_reference", "beta_points", "global_beta", "misdirected_runs", "runs_with_centroid",
           "safe_components", "flag", "error"});
    for (const auto& r : summary) w.row(r);
  });
  return partial ? kPartialGallery : kOk;
}

void add_sus_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--runs", o.runs, "Independent runs")->check(CLI::PositiveNumber);
  cmd->add_option("--samples", o.samples, "Samples per level (sus) or draws per run (mc)")->check(CLI::PositiveNumber);
  cmd->add_option("--p0", o.p0, "Level probability");
  cmd->add_option("--chain-len", o.chain_len, "Markov chain length")->check(CLI::PositiveNumber);
  cmd->add_option("--spread", o.spread, "Proposal standard deviation");
  cmd->add_option("--seed", o.seed, "Master seed");
}

void add_lsf_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--lsf", o.lsf, "Catalog limit state");
  cmd->add_option("--param", o.params, "Limit-state parameter key=value (repeatable)")->take_all();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Subset simulation benchmark and counterexample gallery", "susbench"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto* estimate = app.add_subcommand("estimate", "Estimate a failure probability");
  add_lsf_flags(estimate, o);
  add_sus_flags(estimate, o);
  estimate->add_option("--method", o.method, "sus, mc, form, sorm or exact")
      ->check(CLI::IsMember({"sus", "mc", "form", "sorm", "exact"}));
  estimate->add_option("--out", o.out, "CSV output file (default stdout)");
  estimate->add_flag("--quiet", o.quiet, "No summary line");

  auto* gallery = app.add_subcommand("gallery", "Run every catalog entry");
  add_sus_flags(gallery, o);
  gallery->add_option("--out", o.out, "Output directory")->required();
  gallery->add_flag("--quiet", o.quiet, "No per-entry lines");

  auto* fit = app.add_subcommand("fit", "Fit c * beta^b * Phi(-beta) to ensemble means");
  add_lsf_flags(fit, o);
  add_sus_flags(fit, o);
  fit->add_option("--betas", o.betas, "Comma-separated beta values")->delimiter(',');
  fit->add_option("--input", o.input, "CSV with beta and estimate columns");
  fit->add_flag("--pin-b", o.pin_b, "Hold b at 0");
  fit->add_option("--out", o.out, "Output prefix");
  fit->add_flag("--quiet", o.quiet, "No summary line");

  auto* beta = app.add_subcommand("beta-points", "Locate beta points and SORM factors");
  add_lsf_flags(beta, o);
  beta->add_option("--out", o.out, "CSV output file (default stdout)");
  beta->add_flag("--quiet", o.quiet, "No summary line");

  auto* diagnose = app.add_subcommand("diagnose", "Normality and c.o.v. diagnostics of an estimate CSV");
  diagnose->add_option("--in", o.in, "Estimate CSV")->required();
  diagnose->add_option("--out", o.out, "Output prefix")->required();
  diagnose->add_flag("--quiet", o.quiet, "No summary line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  }

  try {
    if (*estimate) return cmd_estimate(o, out, err);
    if (*gallery) return cmd_gallery(o, out, err);
    if (*fit) return cmd_fit(o, out, err);
    if (*beta) return cmd_beta_points(o, out, err);
    if (*diagnose) return cmd_diagnose(o, out, err);
  } catch (const Failure& f) {
    err << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kBadArguments;
}

}  // namespace sbcli
