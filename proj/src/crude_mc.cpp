#include "susbench/crude_mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "susbench/error.hpp"
#include "susbench/rng.hpp"

namespace susbench {

namespace {

constexpr std::uint64_t kBlock = 1u << 16;

struct BlockTally {
  std::uint64_t failures = 0;
  std::vector<UPoint> kept;
};

}  // namespace

McResult run_mc(const LimitState& lsf, std::uint64_t n, std::uint64_t seed,
                std::size_t keep_failures, unsigned threads) {
  if (n == 0) throw Error(Errc::invalid_argument, "run_mc: n must be >= 1");
  const std::uint64_t n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<BlockTally> tallies(n_blocks);

  auto run_block = [&](std::uint64_t b) {
    Rng rng(derive_seed(seed, {b}));
    const std::uint64_t count = std::min(kBlock, n - b * kBlock);
    UPoint u(lsf.dim());
    BlockTally& t = tallies[b];
    for (std::uint64_t i = 0; i < count; ++i) {
      for (auto& x : u) x = rng.normal();
      if (lsf(u) < 0.0) {
        ++t.failures;
        if (t.kept.size() < keep_failures) t.kept.push_back(u);
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_blocks));
  if (threads <= 1) {
    for (std::uint64_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::uint64_t b = next++; b < n_blocks; b = next++) run_block(b);
      });
  }

  McResult r;
  r.n = n;
  for (auto& t : tallies) {
    r.failures += t.failures;
    for (auto& p : t.kept)
      if (r.failure_points.size() < keep_failures) r.failure_points.push_back(std::move(p));
  }
  r.p_hat = static_cast<double>(r.failures) / static_cast<double>(n);
  if (r.failures > 0) r.cov_hat = std::sqrt((1.0 - r.p_hat) / (r.p_hat * static_cast<double>(n)));
  return r;
}

}  // namespace susbench
