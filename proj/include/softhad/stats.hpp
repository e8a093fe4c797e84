#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace softhad {

// Area under the ROC curve of `scores` as a ranker of `positive`, via the
// rank-sum (Mann-Whitney) statistic. Tied scores contribute midranks, so a
// tied positive-negative pair counts 1/2. Throws if either class is empty.
double rank_auc(std::span<const double> scores, std::span<const char> positive);

// Midranks (1-based, ties averaged) of the given values.
std::vector<double> midranks(std::span<const double> values);

// mt19937_64 wrapper with fixed, portable derived draws (the distribution
// classes in <random> are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  // Uniform double in [0, 1).
  double unit() { return (gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = 0.0;
    while (u1 == 0.0) u1 = unit();
    double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // First k entries of a uniform random permutation of [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 gen_;
};

// Mixes a root seed with a salt into an independent stream seed (splitmix64).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace softhad
