#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace susbench {

/// A point in standard normal space.
using UPoint = std::vector<double>;

/// Limit-state function g on standard normal space; failure is g(u) < 0.
///
/// Instances are immutable. Copies share one evaluation counter, so the
/// counter of a catalog entry reports every evaluation made through any copy.
/// Min-type functions carry their smooth pieces as `branches`; the value is
/// the minimum over branches and geometric analysis uses the active one.
class LimitState {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using VectorFn = std::function<std::vector<double>(std::span<const double>)>;

  struct Definition {
    std::string name;
    std::size_t dim = 2;
    std::map<std::string, double> params;
    ValueFn value;
    VectorFn gradient;  // empty when no analytic gradient exists
    VectorFn hessian;   // row-major dim x dim, optional
    std::vector<LimitState> branches;
    bool quadrant_symmetric = false;
  };

  explicit LimitState(Definition def);

  const std::string& name() const { return def_->name; }
  std::size_t dim() const { return def_->dim; }
  const std::map<std::string, double>& params() const { return def_->params; }
  bool quadrant_symmetric() const { return def_->quadrant_symmetric; }

  /// Counted evaluation.
  double operator()(std::span<const double> u) const;
  double operator()(const UPoint& u) const { return (*this)(std::span<const double>(u)); }

  bool has_gradient() const { return static_cast<bool>(def_->gradient); }
  bool has_hessian() const { return static_cast<bool>(def_->hessian); }
  std::vector<double> gradient(std::span<const double> u) const;
  std::vector<double> hessian(std::span<const double> u) const;

  const std::vector<LimitState>& branches() const { return def_->branches; }
  /// Index of the branch attaining the minimum at u (0 when unbranched).
  std::size_t active_branch(std::span<const double> u) const;
  /// The smooth piece governing u: the active branch, or *this.
  const LimitState& local_piece(std::span<const double> u) const;

  std::uint64_t evaluations() const { return counter_->load(std::memory_order_relaxed); }
  void reset_evaluations() const { counter_->store(0, std::memory_order_relaxed); }

  /// g -> lambda * g for lambda > 0 (same failure domain, own counter).
  LimitState scaled(double lambda) const;

 private:
  std::shared_ptr<const Definition> def_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

/// Central finite-difference gradient with step h (uncounted evaluations).
std::vector<double> fd_gradient(const LimitState::ValueFn& f, std::span<const double> u,
                                double h = 1e-5);
/// Central finite-difference Hessian, row-major.
std::vector<double> fd_hessian(const LimitState::ValueFn& f, std::span<const double> u,
                               double h = 1e-4);

}  // namespace susbench
