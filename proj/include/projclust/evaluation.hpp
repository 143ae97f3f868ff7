#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace projclust {

/// Posterior probability that each pair of subjects shares a cluster:
/// symmetric, unit diagonal, entries (count of labelings with z_i == z_j) / S.
Eigen::MatrixXd coincidence(std::span<const std::vector<int>> labelings);

/// Pair counts by coincidence band: weak (lower, upper] and solid (> upper),
/// over the n(n-1)/2 unordered pairs.
struct ThresholdSummary {
  double lower = 0.5;
  double upper = 0.8;
  std::size_t weak = 0;
  std::size_t solid = 0;
  std::size_t pairs = 0;
};

ThresholdSummary threshold_summary(const Eigen::MatrixXd& coincidence, double lower = 0.5,
                                   double upper = 0.8);

/// Fraction of unordered pairs on which the labelings agree (together in both
/// or apart in both).
double rand_index(std::span<const int> a, std::span<const int> b);

/// Hubert-Arabie adjusted Rand index from the contingency table. When the
/// index is undefined (max == expected) it is 1 for identical partitions and
/// 0 otherwise, and a warning is logged.
double adjusted_rand(std::span<const int> a, std::span<const int> b);

struct IndexSummary {
  double rand_mean = 0.0;
  double rand_sd = 0.0;
  double ari_mean = 0.0;
  double ari_sd = 0.0;
};

/// Mean and sample standard deviation of the Rand and adjusted Rand indices of
/// each labeling against `truth`.
IndexSummary summarize_indices(std::span<const std::vector<int>> labelings, std::span<const int> truth);

}  // namespace projclust
