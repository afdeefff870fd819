#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace envicp {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the bytes of a name.
constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the stream owned by one variable. Depends only on the run seed and
/// the variable's name, so inserting or appending variables never changes the
/// draws of the others.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view variable) {
  return mix64(mix64(seed) ^ hash_name(variable));
}

/// Portable sampler: std::mt19937_64 has a fully specified output sequence,
/// and the transforms below avoid the implementation-defined std distributions.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1].
  double uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  /// Box-Muller, one draw per call.
  double normal(double mean, double sd) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + sd * z;
  }

  /// Sum of Bernoulli trials.
  double binomial(int trials, double prob) {
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      if (uniform() <= prob) ++hits;
    }
    return hits;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace envicp
