#pragma once

#include <cstdint>
#include <random>

namespace pcrp {

// Mixes a master seed and a stream id into an independent 64-bit seed
// (SplitMix64 finalizer applied twice).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Seeded 64-bit generator with named child streams. Each chain or replicate
// gets its own stream via split(), so parallel runs never share state and
// results do not depend on scheduling.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  engine_type& engine() { return engine_; }

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double sd = 1.0);
  double gamma(double shape, double rate);
  std::uint64_t poisson(double mean);
  bool bernoulli(double p);
  std::size_t index(std::size_t n);  // uniform on {0, ..., n-1}

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  engine_type engine_;
};

}  // namespace pcrp
