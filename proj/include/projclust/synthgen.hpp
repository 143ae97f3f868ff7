#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "projclust/dataset.hpp"

namespace projclust {

/// Four-group cosine-mixture generator:
///   y_it = c1[g] cos(pi w1_i t) + c2[g] cos(pi w2_i t) + e_it,  t = 1/T, ..., 1,
/// with w1_i uniform on {1,2,3}, w2_i uniform on {7,8,9} and e_it ~ N(0, noise_var).
/// Groups 1..4 are strong/strong, strong/weak, weak/strong, weak/weak in the
/// (low, high) frequency coefficients.
struct SynthConfig {
  int n_per_group = 10;
  int T = 40;
  double noise_var = 0.1;
  std::uint64_t seed = 0;
  std::array<std::array<double, 2>, 4> coefficients{{{1.0, 1.0}, {1.0, 0.1}, {0.1, 1.0}, {0.1, 0.1}}};
  std::array<int, 3> low_freqs{1, 2, 3};
  std::array<int, 3> high_freqs{7, 8, 9};

  void validate() const;
};

struct SynthData {
  LongitudinalDataset data;
  /// Group of each subject, 1..4, aligned with data.subjects.
  std::vector<int> labels;
};

/// Subjects are emitted group by group with ids g<group>_<index>.
SynthData generate_example1(const SynthConfig& cfg);

}  // namespace projclust
