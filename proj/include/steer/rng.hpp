#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace steer {

// xoshiro256** seeded through splitmix64. The state is a pure function of
// (seed, stream), so every draw sequence is reproducible across platforms.
// Derived quantities (uniform, normal, gamma) use pinned formulas and never
// go through <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent child stream (seed, stream ^ mix(index)).
  Rng child(std::uint64_t index) const { return Rng(seed_, stream_ ^ mix(index)); }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // exp(uniform(log lo, log hi)).
  double log_uniform(double lo, double hi);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  // Box-Muller; the second variate of each pair is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Marsaglia-Tsang, with the shape < 1 boost u^(1/shape).
  double gamma(double shape);
  std::vector<double> dirichlet(std::span<const double> alpha);
  // Index drawn from unnormalized non-negative weights.
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// 64-bit FNV-1a, used to derive per-name streams (e.g. per audio file).
std::uint64_t stream_id(std::string_view name);

}  // namespace steer
