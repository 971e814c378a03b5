// End-to-end acceptance checks. One line per criterion; exit status 1 when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "susbench/catalog.hpp"
#include "susbench/crude_mc.hpp"
#include "susbench/diagnostics.hpp"
#include "susbench/form_sorm.hpp"
#include "susbench/special_fn.hpp"
#include "susbench/subset_sim.hpp"

using namespace susbench;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [x]");
  }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LimitState half_plane(double b) {
  LimitState::Definition d;
  d.name = "half-plane";
  d.value = [b](std::span<const double> u) { return b - u[0]; };
  d.gradient = [](std::span<const double>) { return std::vector<double>{-1.0, 0.0}; };
  return LimitState(std::move(d));
}

SusConfig canonical(std::uint64_t seed) {
  SusConfig cfg;
  cfg.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------

void exact_vs_asymptotic(Outcome& o) {
  double prev = std::numeric_limits<double>::infinity();
  bool in_range = true, decreasing = true;
  std::string ratios;
  for (double beta : {3.0, 4.0, 5.0, 6.0}) {
    const double r = product_k0_formula(beta) / mills_tail_equiv(beta);
    in_range = in_range && r > 1.0 && r <= 1.1;
    decreasing = decreasing && r < prev;
    prev = r;
    ratios += (ratios.empty() ? "" : ",") + num(r);
  }
  o.require(in_range, "ratios " + ratios + " in (1, 1.1]");
  o.require(decreasing, "decreasing");
}

void sorm_factor(Outcome& o) {
  const double beta = std::sqrt(12.0);
  const LimitState prod = make_product_lsf(beta);
  const auto starts = default_starts(2);
  const BetaSearch ps = find_beta_points(prod, starts);
  bool dets = ps.points.size() == 2;
  for (const auto& p : ps.points) dets = dets && std::abs(sorm_correction(prod, p).det_value - 2.0) <= 1e-8;
  o.require(dets, "product: 2 points with det 2");
  const double total = sorm_probability(prod, ps.points);
  o.require(std::abs(total / (kSqrt2 * phi_cdf(-beta)) - 1.0) < 1e-12, "product total sqrt2*Phi(-beta)");

  const double beta_a = std::sqrt(30.0);
  const LimitState absp = make_abs_product_lsf(beta_a);
  const BetaSearch as = find_beta_points(absp, starts);
  o.require(as.points.size() == 4, "abs-product: " + std::to_string(as.points.size()) + " points");
  const double total_a = sorm_probability(absp, as.points);
  o.require(std::abs(total_a / (2.0 * kSqrt2 * phi_cdf(-beta_a)) - 1.0) < 1e-12, "abs-product total 2sqrt2*Phi(-beta)");
}

void benign_cases(Outcome& o) {
  const RunEnsemble h = run_ensemble(half_plane(phi_inv(0.9)), canonical(301), 100);
  const double mh = median(h.estimates);
  o.require(std::abs(mh / 0.1 - 1.0) <= 0.1, "half-plane median " + num(mh) + " vs 0.1");

  const LimitState prod = make_product_lsf(3.0);
  const double truth = product_exact_probability(3.0);
  const RunEnsemble p = run_ensemble(prod, canonical(302), 100);
  const double mp = median(p.estimates);
  o.require(std::abs(mp / truth - 1.0) <= 0.1, "product beta 3 median " + num(mp) + " vs " + num(truth));
}

void invariance(Outcome& o) {
  const LimitState lin = make_linear_series_lsf();
  const LimitState logi = make_logistic_series_lsf();
  const double truth = 3.20e-5;
  const RunEnsemble l = run_ensemble(lin, canonical(401), 50);
  const CovReport cov = delta_cov(l.per_run_conditional, l.estimates);
  const double ml = median(l.estimates);
  o.require(std::abs(ml - truth) <= 3.0 * cov.combined_cov * truth,
            "linear median " + num(ml) + " within 3 x cov " + num(cov.combined_cov));
  const RunEnsemble g = run_ensemble(logi, canonical(402), 50);
  const double mg = median(g.estimates);
  o.require(mg < 3.2e-6, "logistic median " + num(mg) + " < 3.2e-6");
}

void multi_beta_bias(Outcome& o) {
  const double beta = std::sqrt(30.0);
  const RunEnsemble e = run_ensemble(make_abs_product_lsf(beta), canonical(501), 50);
  std::size_t hist[5] = {0, 0, 0, 0, 0};
  for (std::size_t m : e.per_run_modes) ++hist[std::min<std::size_t>(m, 4)];
  const double all_four = static_cast<double>(hist[4]) / 50.0;
  o.require(all_four < 0.5, "modes 0/1/2/3/4 = " + std::to_string(hist[0]) + "/" + std::to_string(hist[1]) + "/" +
                                std::to_string(hist[2]) + "/" + std::to_string(hist[3]) + "/" +
                                std::to_string(hist[4]) + ", all four in " + num(all_four));
  const double sorm = 2.0 * kSqrt2 * phi_cdf(-beta);
  const double m = median(e.estimates);
  o.require(m < sorm, "median " + num(m) + " < " + num(sorm));
}

void lognormality(Outcome& o) {
  const RunEnsemble e = run_ensemble(make_product_lsf(std::sqrt(12.0)), canonical(601), 500);
  const NormalityReport r = normality_report(e.estimates);
  o.require(r.raw.skewness > 1.0, "skew raw " + num(r.raw.skewness));
  o.require(std::abs(r.log10.skewness) < 0.5, "skew log10 " + num(r.log10.skewness));
  o.require(r.qq_corr_log > r.qq_corr_raw, "qq corr log " + num(r.qq_corr_log) + " > raw " + num(r.qq_corr_raw));
}

void delta_method(Outcome& o) {
  for (double p : {0.1, 0.01}) {
    const LimitState g = half_plane(phi_inv(1.0 - p));
    const std::uint64_t n = 2000;
    std::vector<std::vector<double>> levels;
    std::vector<double> est;
    for (std::uint64_t s = 0; s < 400; ++s) {
      const double x = run_mc(g, n, ensemble_run_seed(701, s)).p_hat;
      levels.push_back({x});
      est.push_back(x);
    }
    const double binomial = std::sqrt((1.0 - p) / (p * static_cast<double>(n)));
    const double c = delta_cov(levels, est).combined_cov;
    o.require(std::abs(c / binomial - 1.0) <= 0.1, "mc p=" + num(p) + " cov " + num(c) + " vs " + num(binomial));
  }
  const RunEnsemble e = run_ensemble(make_product_lsf(std::sqrt(12.0)), canonical(702), 200);
  const CovReport r = delta_cov(e.per_run_conditional, e.estimates);
  const double ratio = r.combined_cov / r.empirical_cov;
  o.require(ratio >= 0.5 && ratio <= 2.0,
            "product combined " + num(r.combined_cov) + " vs empirical " + num(r.empirical_cov));
}

void asymptotic_fit(Outcome& o) {
  const double c0 = 1.37, b0 = 0.21;
  std::vector<double> betas{2.5, 3.0, 3.5, 4.0}, synth;
  for (double b : betas) synth.push_back(c0 * std::pow(b, b0) * phi_cdf(-b));
  const AsymptoticFit exact = fit_asymptotic(betas, synth);
  o.require(std::abs(exact.c - c0) <= 1e-10 && std::abs(exact.b - b0) <= 1e-10, "synthetic recovery");

  std::vector<double> means;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const RunEnsemble e = run_ensemble(make_product_lsf(betas[i]), canonical(801 + i), 500);
    double s = 0.0;
    for (double x : e.estimates) s += x;
    means.push_back(s / static_cast<double>(e.size()));
  }
  const AsymptoticFit f = fit_asymptotic(betas, means);
  o.require(f.c >= 1.2 && f.c <= 1.7, "c " + num(f.c) + " in [1.2, 1.7]");
  o.require(f.b >= 0.0 && f.b <= 0.3, "b " + num(f.b) + " in [0, 0.3]");
}

void property_suites(Outcome& o) {
  // Gradients.
  std::vector<LimitState> smooth{make_product_lsf(std::sqrt(12.0)), make_metaball_lsf(5.0), make_pareto_tail_lsf()};
  for (const auto& name : {"abs-product", "linear-series", "logistic-series"}) {
    const LimitState g = make_lsf(name);
    for (const auto& b : g.branches()) smooth.push_back(b);
  }
  std::mt19937_64 gen(901);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  double worst = 0.0;
  for (const auto& g : smooth)
    for (int i = 0; i < 100; ++i) {
      const UPoint u{coord(gen), coord(gen)};
      const auto an = g.gradient(u);
      const auto fd = fd_gradient([&](std::span<const double> x) { return g(x); }, u, 1e-5);
      const double err = std::hypot(an[0] - fd[0], an[1] - fd[1]) / std::max(std::hypot(an[0], an[1]), 1e-3);
      worst = std::max(worst, err);
    }
  o.require(worst <= 1e-5, "gradient worst rel err " + num(worst));

  // Nesting and determinism.
  const LimitState prod = make_product_lsf(std::sqrt(12.0));
  bool nested = true, deterministic = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SusResult r = run_sus(prod, canonical(910 + seed));
    double prev = std::numeric_limits<double>::infinity();
    double product = 1.0;
    for (const auto& level : r.levels) {
      nested = nested && level.threshold < prev && level.threshold >= 0.0;
      prev = level.threshold;
      for (double v : level.values) nested = nested && v <= level.threshold;
      product *= level.conditional_estimate;
    }
    nested = nested && r.p_hat == product;
    const SusResult again = run_sus(prod, canonical(910 + seed));
    deterministic = deterministic && again.p_hat == r.p_hat && again.total_evals == r.total_evals &&
                    again.final_samples() == r.final_samples();
  }
  o.require(nested, "nesting");
  o.require(deterministic, "determinism");

  // Sign equivalence.
  const LimitState lin = make_linear_series_lsf(), logi = make_logistic_series_lsf();
  auto radical = [](std::size_t i, unsigned base) {
    double f = 1.0, r = 0.0;
    for (; i > 0; i /= base) {
      f /= base;
      r += f * static_cast<double>(i % base);
    }
    return r;
  };
  std::size_t mismatches = 0;
  for (std::size_t i = 1; i <= 10000; ++i) {
    const UPoint u{-8.0 + 16.0 * radical(i, 2), -8.0 + 16.0 * radical(i, 3)};
    const double a = lin(u), b = logi(u);
    mismatches += (a < 0) != (b < 0) || (a > 0) != (b > 0);
  }
  o.require(mismatches == 0, "sign mismatches " + std::to_string(mismatches) + "/10000");

  // Metaball components over a d-sweep.
  const std::size_t at5 = safe_set_components(make_metaball_lsf(5.0), -10.0, 10.0, 400);
  o.require(at5 == 2, "metaball d=5: " + std::to_string(at5) + " components");
  std::string sweep;
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  bool monotone = true;
  for (double d : {18.0, 15.0, 12.0, 10.0, 8.0, 5.0, 3.0}) {
    const std::size_t k = safe_set_components(make_metaball_lsf(d), -10.0, 10.0, 400);
    monotone = monotone && k <= prev;
    prev = k;
    sweep += (sweep.empty() ? "" : ",") + std::to_string(k);
  }
  o.require(monotone && prev == 1, "d 18..3 components " + sweep + " merge to 1");
}

void misdirection(Outcome& o) {
  std::uint64_t seed = 1001;
  for (const auto& name : {"piecewise-series", "pareto-tail", "vonmises-mix"}) {
    const LimitState g = make_lsf(name);
    const BetaSearch bs = find_beta_points(g, default_starts(2));
    if (bs.points.empty()) {
      o.require(false, std::string(name) + ": no beta point");
      continue;
    }
    const UPoint& global = bs.points.front().location;
    const RunEnsemble e = run_ensemble(g, canonical(seed++), 50);
    std::size_t away = 0;
    for (const auto& c : e.dominant_centroids)
      if (!c.empty() && angle_between(c, global) > kPi / 4.0) ++away;
    o.require(away > 25, std::string(name) + " misdirected " + std::to_string(away) + "/50");
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double limit_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "exact vs asymptotic reference", 1, exact_vs_asymptotic},
      {2, "second-order factor", 1, sorm_factor},
      {3, "benign cases", 60, benign_cases},
      {4, "invariance counterexample", 120, invariance},
      {5, "multiple beta points", 120, multi_beta_bias},
      {6, "lognormality", 300, lognormality},
      {7, "delta-method c.o.v.", 120, delta_method},
      {8, "asymptotic fit", 180, asymptotic_fit},
      {9, "property suites", 60, property_suites},
      {10, "misdirection", 180, misdirection},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < c.limit_s, "time " + num(secs) + " s < " + num(c.limit_s) + " s");
    std::printf("criterion %2d %s: %s (%s)\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
