#include "susbench/limit_state.hpp"

#include <utility>

#include "susbench/error.hpp"

namespace susbench {

LimitState::LimitState(Definition def)
    : def_(std::make_shared<const Definition>(std::move(def))),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  if (def_->dim == 0) throw Error(Errc::invalid_argument, "limit state dimension must be >= 1");
  if (!def_->value) throw Error(Errc::invalid_argument, "limit state needs an evaluator");
}

double LimitState::operator()(std::span<const double> u) const {
  counter_->fetch_add(1, std::memory_order_relaxed);
  return def_->value(u);
}

std::vector<double> LimitState::gradient(std::span<const double> u) const {
  if (def_->gradient) return def_->gradient(u);
  if (!def_->branches.empty()) return local_piece(u).gradient(u);
  return fd_gradient(def_->value, u);
}

std::vector<double> LimitState::hessian(std::span<const double> u) const {
  if (def_->hessian) return def_->hessian(u);
  if (!def_->branches.empty()) return local_piece(u).hessian(u);
  return fd_hessian(def_->value, u);
}

std::size_t LimitState::active_branch(std::span<const double> u) const {
  std::size_t best = 0;
  double best_value = 0.0;
  for (std::size_t i = 0; i < def_->branches.size(); ++i) {
    const double v = def_->branches[i].def_->value(u);
    if (i == 0 || v < best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

const LimitState& LimitState::local_piece(std::span<const double> u) const {
  if (def_->branches.empty()) return *this;
  return def_->branches[active_branch(u)];
}

LimitState LimitState::scaled(double lambda) const {
  if (!(lambda > 0.0)) throw Error(Errc::domain, "scale factor must be positive");
  Definition d = *def_;
  d.name = def_->name + "*" + std::to_string(lambda);
  d.value = [f = def_->value, lambda](std::span<const double> u) { return lambda * f(u); };
  auto scale_vec = [lambda](VectorFn fn) -> VectorFn {
    if (!fn) return {};
    return [fn = std::move(fn), lambda](std::span<const double> u) {
      auto v = fn(u);
      for (auto& x : v) x *= lambda;
      return v;
    };
  };
  d.gradient = scale_vec(def_->gradient);
  d.hessian = scale_vec(def_->hessian);
  d.branches.clear();
  for (const auto& b : def_->branches) d.branches.push_back(b.scaled(lambda));
  return LimitState(std::move(d));
}

std::vector<double> fd_gradient(const LimitState::ValueFn& f, std::span<const double> u, double h) {
  std::vector<double> x(u.begin(), u.end());
  std::vector<double> g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::vector<double> fd_hessian(const LimitState::ValueFn& f, std::span<const double> u, double h) {
  const std::size_t n = u.size();
  std::vector<double> x(u.begin(), u.end());
  std::vector<double> hess(n * n);
  const double f0 = f(x);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    hess[i * n + i] = (fp - 2.0 * f0 + fm) / (h * h);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double xj = x[j];
      auto at = [&](double di, double dj) {
        x[i] = xi + di;
        x[j] = xj + dj;
        const double v = f(x);
        x[i] = xi;
        x[j] = xj;
        return v;
      };
      const double mixed = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
      hess[i * n + j] = mixed;
      hess[j * n + i] = mixed;
    }
  }
  return hess;
}

}  // namespace susbench
