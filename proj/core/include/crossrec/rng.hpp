#pragma once

#include <cstdint>
#include <random>

namespace crossrec {

// Seeded RNG wrapper. Same seed gives the same draw sequence for the
// lifetime of a build; all stochastic code in the library draws through
// this type so runs are reproducible from a single integer.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  void reset() { gen_.seed(seed_); }
  void reseed(std::uint64_t seed) {
    seed_ = seed;
    gen_.seed(seed);
  }

  double uniform() { return unit_(gen_); }

  double normal(double mean, double stddev) {
    return mean + stddev * normal_(gen_);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(gen_);
  }

  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(gen_);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace crossrec
