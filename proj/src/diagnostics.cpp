#include "susbench/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "susbench/error.hpp"
#include "susbench/special_fn.hpp"

namespace susbench {

std::uint64_t ensemble_run_seed(std::uint64_t master, std::size_t run) {
  return derive_seed(master, {0x656e73ULL, run});
}

RunEnsemble run_ensemble(const LimitState& lsf, const SusConfig& cfg, std::size_t n_runs,
                         unsigned threads) {
  if (n_runs == 0) throw Error(Errc::invalid_argument, "run_ensemble: n_runs must be >= 1");
  cfg.validate();
  RunEnsemble e;
  e.estimates.resize(n_runs);
  e.per_run_levels.resize(n_runs);
  e.per_run_modes.resize(n_runs);
  e.seeds.resize(n_runs);
  e.per_run_conditional.resize(n_runs);
  e.terminated.resize(n_runs);
  e.total_evals.resize(n_runs);
  e.dominant_centroids.resize(n_runs);

  auto one = [&](std::size_t r) {
    SusConfig c = cfg;
    c.seed = ensemble_run_seed(cfg.seed, r);
    const SusResult res = run_sus(lsf, c);
    e.seeds[r] = c.seed;
    e.estimates[r] = res.p_hat;
    e.per_run_levels[r] = res.levels.size();
    e.per_run_conditional[r] = res.conditional_estimates();
    e.terminated[r] = res.terminated;
    e.total_evals[r] = res.total_evals;
    e.per_run_modes[r] = count_modes(res.final_samples(), lsf);
    if (!res.final_samples().empty()) e.dominant_centroids[r] = dominant_cluster(res.final_samples()).centroid;
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_runs));
  if (threads <= 1) {
    for (std::size_t r = 0; r < n_runs; ++r) one(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < n_runs; r = next++) one(r);
      });
  }
  return e;
}

CovReport delta_cov(const std::vector<std::vector<double>>& per_run_levels,
                    std::span<const double> estimates) {
  std::map<std::size_t, std::size_t> by_count;
  for (const auto& run : per_run_levels) ++by_count[run.size()];
  std::size_t mode = 0;
  std::size_t mode_runs = 0;
  for (const auto& [count, runs] : by_count)
    if (runs > mode_runs) {
      mode = count;
      mode_runs = runs;
    }
  if (mode_runs < 2 || mode == 0)
    throw Error(Errc::insufficient_data, "delta_cov: fewer than two runs with a common level count");

  CovReport rep;
  rep.level_count = mode;
  rep.runs_used = mode_runs;
  rep.runs_excluded = per_run_levels.size() - mode_runs;

  std::vector<std::vector<double>> cols(mode);
  for (const auto& run : per_run_levels)
    if (run.size() == mode)
      for (std::size_t i = 0; i < mode; ++i) cols[i].push_back(run[i]);

  const double n = static_cast<double>(mode_runs);
  std::vector<double> mean(mode), sd(mode);
  for (std::size_t i = 0; i < mode; ++i) {
    mean[i] = std::accumulate(cols[i].begin(), cols[i].end(), 0.0) / n;
    double ss = 0.0;
    for (double v : cols[i]) ss += (v - mean[i]) * (v - mean[i]);
    const auto [lo, hi] = std::minmax_element(cols[i].begin(), cols[i].end());
    sd[i] = *lo == *hi ? 0.0 : std::sqrt(ss / (n - 1.0));
    rep.per_level_cov.push_back(mean[i] > 0.0 ? sd[i] / mean[i] : 0.0);
  }
  rep.per_level_corr.assign(mode, std::vector<double>(mode, 0.0));
  for (std::size_t i = 0; i < mode; ++i) {
    rep.per_level_corr[i][i] = 1.0;
    for (std::size_t j = i + 1; j < mode; ++j) {
      if (sd[i] == 0.0 || sd[j] == 0.0) continue;
      double c = 0.0;
      for (std::size_t k = 0; k < mode_runs; ++k) c += (cols[i][k] - mean[i]) * (cols[j][k] - mean[j]);
      const double r = std::clamp(c / (n - 1.0) / (sd[i] * sd[j]), -1.0, 1.0);
      rep.per_level_corr[i][j] = r;
      rep.per_level_corr[j][i] = r;
    }
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < mode; ++i)
    for (std::size_t j = 0; j < mode; ++j)
      sq += rep.per_level_cov[i] * rep.per_level_cov[j] * rep.per_level_corr[i][j];
  rep.combined_cov = std::sqrt(std::max(sq, 0.0));

  if (estimates.size() >= 2) {
    const Moments m = moments(estimates);
    rep.empirical_cov = m.mean > 0.0 ? m.sd / m.mean : 0.0;
  }
  return rep;
}

Moments moments(std::span<const double> x) {
  if (x.size() < 2) throw Error(Errc::insufficient_data, "moments: need at least two values");
  const double n = static_cast<double>(x.size());
  Moments m;
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m.sd = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

std::vector<QqPoint> qq_pairs(std::span<const double> x) {
  const Moments m = moments(x);
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  std::vector<QqPoint> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double z = m.sd > 0.0 ? (s[i] - m.mean) / m.sd : 0.0;
    out.push_back({phi_inv((static_cast<double>(i) + 0.5) / n), z});
  }
  return out;
}

double qq_correlation(std::span<const QqPoint> qq) {
  const double n = static_cast<double>(qq.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : qq) {
    mx += p.theoretical / n;
    my += p.sample / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& p : qq) {
    sxy += (p.theoretical - mx) * (p.sample - my);
    sxx += (p.theoretical - mx) * (p.theoretical - mx);
    syy += (p.sample - my) * (p.sample - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> positive_log10(std::span<const double> estimates, std::size_t& zeros) {
  std::vector<double> logs;
  zeros = 0;
  for (double p : estimates) {
    if (p < 0.0 || !std::isfinite(p)) throw Error(Errc::invalid_argument, "estimates must be finite and >= 0");
    if (p == 0.0) {
      ++zeros;
      continue;
    }
    logs.push_back(std::log10(p));
  }
  if (logs.size() < 20) throw Error(Errc::insufficient_data, "need at least 20 positive estimates");
  return logs;
}

}  // namespace

NormalityReport normality_report(std::span<const double> estimates) {
  NormalityReport rep;
  const auto logs = positive_log10(estimates, rep.zero_estimates);
  rep.raw = moments(estimates);
  rep.log10 = moments(logs);
  rep.qq_raw = qq_pairs(estimates);
  rep.qq_log = qq_pairs(logs);
  rep.qq_corr_raw = qq_correlation(rep.qq_raw);
  rep.qq_corr_log = qq_correlation(rep.qq_log);
  return rep;
}

std::pair<double, double> lognormal_ci(std::span<const double> estimates, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::invalid_argument, "lognormal_ci: level must lie in (0, 1)");
  std::size_t zeros = 0;
  const auto logs = positive_log10(estimates, zeros);
  const Moments m = moments(logs);
  const double z = phi_inv(0.5 * (1.0 + level));
  return {std::pow(10.0, m.mean - z * m.sd), std::pow(10.0, m.mean + z * m.sd)};
}

std::vector<std::size_t> single_linkage(std::span<const UPoint> points, double link) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  const double link2 = link * link;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < points[i].size(); ++k) {
        const double d = points[i][k] - points[j][k];
        d2 += d * d;
      }
      if (d2 <= link2) parent[find(i)] = find(j);
    }
  // Relabel roots densely in order of first appearance.
  std::map<std::size_t, std::size_t> label;
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(i);
    const auto it = label.try_emplace(root, label.size()).first;
    out[i] = it->second;
  }
  return out;
}

Cluster dominant_cluster(std::span<const UPoint> points, double link) {
  if (points.empty()) return {};
  const auto labels = single_linkage(points, link);
  const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::size_t> sizes(k, 0);
  for (auto l : labels) ++sizes[l];
  const std::size_t best =
      static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  Cluster c;
  c.size = sizes[best];
  c.centroid.assign(points.front().size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i)
    if (labels[i] == best)
      for (std::size_t d = 0; d < c.centroid.size(); ++d) c.centroid[d] += points[i][d];
  for (auto& v : c.centroid) v /= static_cast<double>(c.size);
  return c;
}

std::size_t count_modes(std::span<const UPoint> samples, const LimitState& lsf) {
  std::vector<UPoint> failing;
  for (const auto& u : samples)
    if (lsf(u) < 0.0) failing.push_back(u);
  if (failing.empty()) return 0;
  if (lsf.quadrant_symmetric()) {
    std::set<std::vector<bool>> patterns;
    for (const auto& u : failing) {
      std::vector<bool> sign(u.size());
      for (std::size_t k = 0; k < u.size(); ++k) sign[k] = u[k] < 0.0;
      patterns.insert(std::move(sign));
    }
    return patterns.size();
  }
  const auto labels = single_linkage(failing, 1.0);
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

std::size_t safe_set_components(const LimitState& lsf, double lo, double hi, std::size_t n) {
  if (lsf.dim() != 2 || n < 2 || !(hi > lo)) throw Error(Errc::invalid_argument, "safe_set_components: 2-D grid only");
  std::vector<char> safe(n * n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const UPoint u{lo + h * static_cast<double>(i), lo + h * static_cast<double>(j)};
      safe[i * n + j] = lsf(u) >= 0.0;
    }
  std::size_t components = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n * n; ++start) {
    if (!safe[start]) continue;
    ++components;
    safe[start] = 0;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const std::size_t i = c / n;
      const std::size_t j = c % n;
      auto visit = [&](std::size_t k) {
        if (safe[k]) {
          safe[k] = 0;
          stack.push_back(k);
        }
      };
      if (i > 0) visit(c - n);
      if (i + 1 < n) visit(c + n);
      if (j > 0) visit(c - 1);
      if (j + 1 < n) visit(c + 1);
    }
  }
  return components;
}

double angle_between(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return kPi;
  return std::acos(std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0));
}

}  // namespace susbench
