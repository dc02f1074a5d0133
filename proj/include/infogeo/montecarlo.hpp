#pragma once

// Seeded Monte Carlo expectations under product families.
//
// Samples are grouped into fixed blocks of kMonteCarloBlock draws. Block b
// draws from its own counter-derived substream of the master seed, and block
// statistics are merged in block order, so the estimate is a pure function of
// (n_samples, seed) whatever the chunking or worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "infogeo/errors.hpp"
#include "infogeo/family.hpp"
#include "infogeo/quadrature.hpp"
#include "infogeo/types.hpp"

namespace infogeo {

inline constexpr std::int64_t kMonteCarloBlock = 4096;

struct MonteCarloSpec {
  std::int64_t n_samples = 100'000;
  std::uint64_t seed = 1;
  /// Samples per scheduled work unit; rounded up to whole blocks.
  std::int64_t chunk_size = 65'536;
  /// Threads; 0 picks the hardware concurrency.
  int workers = 1;

  void validate() const {
    if (n_samples < 1) throw ArgumentError("n_samples must be >= 1");
    if (chunk_size < 1) throw ArgumentError("chunk_size must be >= 1");
    if (workers < 0) throw ArgumentError("workers must be >= 0");
  }
};

/// SplitMix64 stream keyed by (seed, stream index).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : state_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Running mean and centered second moment of a vector-valued sample.
template <typename Scalar = double>
struct MomentAccumulator {
  std::int64_t count = 0;
  Vector<Scalar> mean;
  Vector<Scalar> m2;

  explicit MomentAccumulator(Eigen::Index k = 0) : mean(Vector<Scalar>::Zero(k)), m2(Vector<Scalar>::Zero(k)) {}

  void push(const Vector<Scalar>& x) {
    ++count;
    const Vector<Scalar> delta = x - mean;
    mean += delta / static_cast<Scalar>(count);
    m2 += delta.cwiseProduct(x - mean);
  }

  void merge(const MomentAccumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const std::int64_t n = count + other.count;
    const Vector<Scalar> delta = other.mean - mean;
    const Scalar w = static_cast<Scalar>(other.count) / static_cast<Scalar>(n);
    mean += delta * w;
    m2 += other.m2 + delta.cwiseProduct(delta) * (static_cast<Scalar>(count) * w);
    count = n;
  }

  /// Standard error of the mean, per component.
  Vector<Scalar> standard_error() const {
    if (count < 2) return Vector<Scalar>::Zero(mean.size());
    const Scalar n = static_cast<Scalar>(count);
    return (m2.array().max(Scalar(0)) / (n - 1) / n).sqrt().matrix();
  }
};

template <typename Scalar = double>
struct VectorEstimate {
  Vector<Scalar> value;
  Vector<Scalar> standard_error;
  std::int64_t samples = 0;
};

/// Draws one sample from a product structure by inverse transform, one
/// uniform per axis.
template <typename Scalar>
void sample_product(const ProductStructure<Scalar>& ps, CounterRng& rng, Vector<Scalar>& x) {
  for (std::size_t a = 0; a < ps.factors.size(); ++a)
    x(static_cast<Eigen::Index>(a)) = ps.factors[a].inverse_cdf(static_cast<Scalar>(rng.uniform()));
}

/// Sample mean and standard error of a vector-valued f under the product
/// structure. f must return vectors of length `outputs`.
template <typename Scalar = double, typename F>
VectorEstimate<Scalar> mc_expectation_vector(const ProductStructure<Scalar>& ps, const F& f, Eigen::Index outputs,
                                             const MonteCarloSpec& spec) {
  spec.validate();
  const std::int64_t n = spec.n_samples;
  const std::int64_t blocks = (n + kMonteCarloBlock - 1) / kMonteCarloBlock;
  const std::int64_t blocks_per_chunk = std::max<std::int64_t>(1, (spec.chunk_size + kMonteCarloBlock - 1) / kMonteCarloBlock);
  const std::int64_t chunks = (blocks + blocks_per_chunk - 1) / blocks_per_chunk;
  const Eigen::Index dim = static_cast<Eigen::Index>(ps.factors.size());

  std::vector<MomentAccumulator<Scalar>> block_stats(static_cast<std::size_t>(blocks), MomentAccumulator<Scalar>(outputs));

  auto run_chunk = [&](std::int64_t chunk) {
    Vector<Scalar> x(dim);
    const std::int64_t first = chunk * blocks_per_chunk;
    const std::int64_t last = std::min(blocks, first + blocks_per_chunk);
    for (std::int64_t b = first; b < last; ++b) {
      CounterRng rng(spec.seed, static_cast<std::uint64_t>(b));
      auto& acc = block_stats[static_cast<std::size_t>(b)];
      const std::int64_t count = std::min(kMonteCarloBlock, n - b * kMonteCarloBlock);
      for (std::int64_t i = 0; i < count; ++i) {
        sample_product(ps, rng, x);
        acc.push(f(x));
      }
    }
  };

  const int workers = spec.workers > 0 ? spec.workers : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const std::int64_t n_threads = std::min<std::int64_t>(workers, chunks);
  if (n_threads <= 1) {
    for (std::int64_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (std::int64_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        for (std::int64_t c = t; c < chunks; c += n_threads) run_chunk(c);
      });
  }

  MomentAccumulator<Scalar> total(outputs);
  for (const auto& b : block_stats) total.merge(b);
  return {total.mean, total.standard_error(), total.count};
}

/// E[f] under the family by inverse-transform sampling. error_estimate is
/// the standard error of the sample mean.
template <typename Scalar = double, typename F>
IntegralEstimate<Scalar> mc_expectation(const Family<Scalar>& family, const F& f, const MonteCarloSpec& spec) {
  const auto ps = family.product_structure();
  if (!ps) throw CapabilityError("Monte Carlo sampling requires a product structure");
  const auto est = mc_expectation_vector<Scalar>(
      *ps,
      [&](const Vector<Scalar>& x) {
        Vector<Scalar> v(1);
        v(0) = static_cast<Scalar>(f(x));
        return v;
      },
      1, spec);
  return {est.value(0), est.standard_error(0), est.samples, IntegrationMethod::montecarlo};
}

}  // namespace infogeo
