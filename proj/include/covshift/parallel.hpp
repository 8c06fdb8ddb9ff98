#pragma once

// Chunked Monte Carlo reduction. Work is split into fixed-size chunks, each
// chunk draws from its own stream derive_seed(seed, chunk), and partial
// results are merged in chunk order. The result therefore depends only on
// (seed, m), never on the number of threads or on the execution policy.

#include "covshift/rng.hpp"
#include "covshift/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace covshift {

enum class ExecPolicy { Serial, Parallel };

inline constexpr std::size_t kMonteCarloChunk = 4096;

/// Worker count for parallel loops: COVSHIFT_THREADS if set and positive,
/// otherwise the OpenMP default.
int worker_count();

/// Running mean and sum of squared deviations over arrays of fixed shape.
/// merge() uses the pairwise update of Chan et al., so chunk partials can be
/// combined without catastrophic cancellation.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  MomentAccumulator(Eigen::Index rows, Eigen::Index cols)
      : mean_(Eigen::ArrayXXd::Zero(rows, cols)), m2_(Eigen::ArrayXXd::Zero(rows, cols)) {}

  template <class Derived>
  void add(const Eigen::ArrayBase<Derived>& x) {
    ++count_;
    const Eigen::ArrayXXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  void add(double x) {
    Eigen::ArrayXXd a(1, 1);
    a(0, 0) = x;
    add(a);
  }

  void merge(const MomentAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const Eigen::ArrayXXd delta = other.mean_ - mean_;
    mean_ += delta * (nb / n);
    m2_ += other.m2_ + delta.square() * (na * nb / n);
    count_ += other.count_;
  }

  std::size_t count() const { return count_; }
  const Eigen::ArrayXXd& mean() const { return mean_; }

  /// Standard error of the mean, entrywise.
  Eigen::ArrayXXd standard_error() const {
    if (count_ < 2) return Eigen::ArrayXXd::Zero(mean_.rows(), mean_.cols());
    const double n = static_cast<double>(count_);
    return (m2_ / (n - 1.0) / n).sqrt();
  }

 private:
  std::size_t count_ = 0;
  Eigen::ArrayXXd mean_;
  Eigen::ArrayXXd m2_;
};

/// Runs body(rng, acc) for each of m samples, chunked as described above.
/// make_acc() builds an empty accumulator; Acc must provide merge().
template <class Acc, class MakeAcc, class Body>
Acc chunked_reduce(std::size_t m, std::uint64_t seed, ExecPolicy policy, MakeAcc make_acc,
                   Body body) {
  const std::size_t chunks = (m + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<Acc> partial(chunks, make_acc());
  auto run_chunk = [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const std::size_t begin = c * kMonteCarloChunk;
    const std::size_t end = std::min(m, begin + kMonteCarloChunk);
    Acc& acc = partial[c];
    for (std::size_t i = begin; i < end; ++i) body(rng, acc);
  };

  if (policy == ExecPolicy::Parallel) {
    const long long nchunks = static_cast<long long>(chunks);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (long long c = 0; c < nchunks; ++c) run_chunk(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  }

  Acc total = make_acc();
  for (const Acc& p : partial) total.merge(p);
  return total;
}

}  // namespace covshift
