#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace projclust {

/// 64-bit mixing function (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Stable FNV-1a hash, used to key substreams by subject id.
std::uint64_t fnv1a(std::string_view s);

/// Random source whose state is a pure function of a key tuple. Independent
/// substreams are obtained by keying on (seed, chain, subject, ...), so the
/// numbers a consumer sees never depend on the order other consumers ran in.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

  double normal();
  double uniform();
  /// Gamma with the given shape and rate.
  double gamma(double shape, double rate);
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  Eigen::VectorXd normal_vector(Eigen::Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace projclust
