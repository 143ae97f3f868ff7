#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "projclust/replicate.hpp"

namespace projclust {

/// A clustering of n subjects into K groups with shared-effect centroids.
/// Labels are 0-based here; files use 1-based labels.
struct Partition {
  std::vector<int> labels;
  std::vector<Eigen::VectorXd> centroids;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after each centroid update of the winning run.
  std::vector<double> history;

  int num_clusters() const { return static_cast<int>(centroids.size()); }
};

/// Precision-weighted centroid of each cluster:
/// d_j = (sum_{i in C_j} Qinv_i)^-1 sum_{i in C_j} Qinv_i b_iA.
/// Every cluster in [0, K) must have at least one member.
std::vector<Eigen::VectorXd> centroid_update(std::span<const int> labels, int K,
                                             const ProjectionInputs& in);

/// Nearest centroid for each subject under its own metric Qinv_i; ties go to
/// the lowest cluster index.
std::vector<int> assign(const ProjectionInputs& in, std::span<const Eigen::VectorXd> centroids);

/// Sum over subjects of kl_term(b_iA, d_{z_i}, Qinv_i).
double objective_kl(const ProjectionInputs& in, std::span<const int> labels,
                    std::span<const Eigen::VectorXd> centroids);
double objective_kl(const ProjectionInputs& in, const Partition& partition);

struct ProjectionOptions {
  int max_iter = 100;
  int n_restarts = 10;
  std::uint64_t seed = 0;
  /// Extra starting labelling tried before the random restarts.
  std::optional<std::vector<int>> init_labels;
};

/// Greedy K-means-type minimizer of the summed KL objective. Alternates
/// centroid_update and assign until the labels stop changing or max_iter is
/// reached, over n_restarts random initializations plus init_labels, and
/// keeps the run with the smallest objective.
///
/// A cluster emptied by assign is reseated on the subject with the largest
/// current KL contribution. If every contribution is at rounding level (<= 1e-12) the
/// cluster stays empty and keeps its previous centroid.
Partition project_cluster(const ProjectionInputs& in, int K, const ProjectionOptions& opts = {});

/// Warm start for K + 1 clusters from a K-cluster solution: the subject with
/// the largest KL contribution (among clusters with at least two members)
/// opens a new cluster. Empty when no subject can be split off.
std::optional<std::vector<int>> split_warm_start(const ProjectionInputs& in, const Partition& previous);

}  // namespace projclust
