#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace aris {

/// Seeded random source with self-contained distributions.
///
/// The standard library distributions are implementation-defined, so two
/// builds of the same program can disagree on the sampled sequence. Every
/// distribution here is implemented on top of the (fully specified)
/// mt19937_64 stream, which keeps simulation runs reproducible from the
/// seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive. Rejection-sampled, no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(gen_());  // full span
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % range);
  }

  /// Marsaglia polar method; caches the spare deviate.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return mean + stddev * u * m;
  }

  /// Exponential inter-arrival time for a rate-`rate` Poisson process.
  double exponential(double rate) {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return -std::log(u) / rate;
  }

  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    double p = 1.0;
    int k = 0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  /// Weighted pick over `weights[0..n)`; weights need not be normalized.
  int pick_weighted(const double* weights, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += weights[i];
    double u = uniform() * total;
    for (int i = 0; i < n; ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return n - 1;
  }

  /// Derive an independent child stream; mixing via splitmix64.
  Rng fork(std::uint64_t stream_id) const {
    std::uint64_t z = seed_ ^ (stream_id + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace aris
