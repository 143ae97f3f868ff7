#include "projclust/projection.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "projclust/errors.hpp"
#include "projclust/linalg.hpp"
#include "projclust/rng.hpp"

namespace projclust {
namespace {

constexpr double kPerfectFit = 1e-12;

void check_inputs(const ProjectionInputs& in) {
  if (in.b_A.size() != in.Qinv.size()) throw ValidationError("projection: b_A and Qinv differ in length");
  if (in.b_A.empty()) throw ValidationError("projection: no subjects");
  const auto dim = in.b_A.front().size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in.b_A[i].size() != dim || in.Qinv[i].rows() != dim || in.Qinv[i].cols() != dim) {
      throw ValidationError("projection: inconsistent dimensions at subject " + std::to_string(i));
    }
  }
}

std::vector<int> cluster_sizes(std::span<const int> labels, int K) {
  std::vector<int> sizes(static_cast<std::size_t>(K), 0);
  for (int z : labels) ++sizes[static_cast<std::size_t>(z)];
  return sizes;
}

/// Recomputes the centroid of every nonempty cluster in place.
void update_nonempty(std::span<const int> labels, const ProjectionInputs& in,
                     std::vector<Eigen::VectorXd>& centroids) {
  const auto K = static_cast<int>(centroids.size());
  const auto dim = in.b_A.front().size();
  std::vector<Eigen::MatrixXd> precision(static_cast<std::size_t>(K), Eigen::MatrixXd::Zero(dim, dim));
  std::vector<Eigen::VectorXd> weighted(static_cast<std::size_t>(K), Eigen::VectorXd::Zero(dim));
  std::vector<int> sizes(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto z = static_cast<std::size_t>(labels[i]);
    precision[z] += in.Qinv[i];
    weighted[z] += in.Qinv[i] * in.b_A[i];
    ++sizes[z];
  }
  for (int j = 0; j < K; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    if (sizes[jj] == 0) continue;
    if (sizes[jj] == 1) {
      // The weighted mean of a single member is the member itself.
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (labels[i] == j) centroids[jj] = in.b_A[i];
      }
      continue;
    }
    centroids[jj] = robust_llt(precision[jj], "summed cluster precision").solve(weighted[jj]);
  }
}

std::vector<int> random_labels(const ProjectionInputs& in, int K, Rng& rng) {
  std::vector<std::size_t> perm(in.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  // K distinct subjects act as seed centroids; everyone joins the nearest.
  std::vector<Eigen::VectorXd> seeds;
  for (int k = 0; k < K; ++k) seeds.push_back(in.b_A[perm[static_cast<std::size_t>(k)]]);
  std::vector<int> labels = assign(in, seeds);
  for (int k = 0; k < K; ++k) labels[perm[static_cast<std::size_t>(k)]] = k;
  return labels;
}

std::vector<double> contributions(const ProjectionInputs& in, std::span<const int> labels,
                                  std::span<const Eigen::VectorXd> centroids) {
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = kl_term(in.b_A[i], centroids[static_cast<std::size_t>(labels[i])], in.Qinv[i]);
  }
  return out;
}

/// Reseats empty clusters on the worst-fitted subjects.
void repair_empty(const ProjectionInputs& in, std::vector<int>& labels,
                  std::vector<Eigen::VectorXd>& centroids) {
  const auto K = static_cast<int>(centroids.size());
  for (int j = 0; j < K; ++j) {
    if (cluster_sizes(labels, K)[static_cast<std::size_t>(j)] > 0) continue;
    const auto contrib = contributions(in, labels, centroids);
    const auto worst = std::max_element(contrib.begin(), contrib.end());
    // Rounding-level misfit counts as a perfect fit.
    if (*worst <= kPerfectFit) continue;
    const auto i = static_cast<std::size_t>(worst - contrib.begin());
    labels[i] = j;
    centroids[static_cast<std::size_t>(j)] = in.b_A[i];
  }
}

Partition run_once(const ProjectionInputs& in, int K, std::vector<int> labels, int max_iter) {
  Partition part;
  part.centroids.assign(static_cast<std::size_t>(K), Eigen::VectorXd::Zero(in.b_A.front().size()));
  repair_empty(in, labels, part.centroids);
  for (int iter = 1; iter <= max_iter; ++iter) {
    update_nonempty(labels, in, part.centroids);
    part.history.push_back(objective_kl(in, labels, part.centroids));
    part.iterations = iter;
    std::vector<int> next = assign(in, part.centroids);
    repair_empty(in, next, part.centroids);
    if (next == labels) {
      part.converged = true;
      break;
    }
    labels = std::move(next);
  }
  if (!part.converged) update_nonempty(labels, in, part.centroids);
  part.labels = std::move(labels);
  part.objective = objective_kl(in, part.labels, part.centroids);
  return part;
}

}  // namespace

std::vector<Eigen::VectorXd> centroid_update(std::span<const int> labels, int K,
                                             const ProjectionInputs& in) {
  check_inputs(in);
  if (labels.size() != in.size()) throw ValidationError("centroid_update: label count mismatch");
  for (int z : labels) {
    if (z < 0 || z >= K) throw ValidationError("centroid_update: label out of range");
  }
  const auto sizes = cluster_sizes(labels, K);
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw ValidationError("centroid_update: empty cluster");
  }
  std::vector<Eigen::VectorXd> centroids(static_cast<std::size_t>(K));
  update_nonempty(labels, in, centroids);
  return centroids;
}

std::vector<int> assign(const ProjectionInputs& in, std::span<const Eigen::VectorXd> centroids) {
  if (centroids.empty()) throw ValidationError("assign: need at least one centroid");
  std::vector<int> labels(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      const Eigen::VectorXd delta = centroids[j] - in.b_A[i];
      const double dist = delta.dot(in.Qinv[i] * delta);
      if (dist < best) {
        best = dist;
        labels[i] = static_cast<int>(j);
      }
    }
  }
  return labels;
}

double objective_kl(const ProjectionInputs& in, std::span<const int> labels,
                    std::span<const Eigen::VectorXd> centroids) {
  if (labels.size() != in.size()) throw ValidationError("objective_kl: label count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    total += kl_term(in.b_A[i], centroids[static_cast<std::size_t>(labels[i])], in.Qinv[i]);
  }
  return total;
}

double objective_kl(const ProjectionInputs& in, const Partition& partition) {
  return objective_kl(in, partition.labels, partition.centroids);
}

Partition project_cluster(const ProjectionInputs& in, int K, const ProjectionOptions& opts) {
  check_inputs(in);
  const auto n = in.size();
  if (K < 1) throw ValidationError("project_cluster: K must be >= 1");
  if (static_cast<std::size_t>(K) > n) {
    throw ValidationError("project_cluster: K = " + std::to_string(K) + " exceeds n = " + std::to_string(n));
  }
  if (opts.max_iter < 1 || opts.n_restarts < 0) throw ValidationError("project_cluster: bad options");

  std::optional<Partition> best;
  auto consider = [&](Partition candidate) {
    if (!best || candidate.objective < best->objective) best = std::move(candidate);
  };
  if (opts.init_labels) {
    const auto& init = *opts.init_labels;
    if (init.size() != n) throw ValidationError("project_cluster: init_labels has wrong length");
    for (int z : init) {
      if (z < 0 || z >= K) throw ValidationError("project_cluster: init label out of range");
    }
    consider(run_once(in, K, init, opts.max_iter));
  }
  for (int r = 0; r < opts.n_restarts; ++r) {
    Rng rng = Rng::substream(opts.seed, {static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(r)});
    consider(run_once(in, K, random_labels(in, K, rng), opts.max_iter));
  }
  if (!best) throw ValidationError("project_cluster: no initialization (n_restarts = 0 and no init_labels)");
  return std::move(*best);
}

std::optional<std::vector<int>> split_warm_start(const ProjectionInputs& in, const Partition& previous) {
  const int K = previous.num_clusters();
  if (static_cast<std::size_t>(K) >= in.size()) return std::nullopt;
  const auto sizes = cluster_sizes(previous.labels, K);
  const auto contrib = contributions(in, previous.labels, previous.centroids);
  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (sizes[static_cast<std::size_t>(previous.labels[i])] < 2) continue;
    if (!pick || contrib[i] > contrib[*pick]) pick = i;
  }
  if (!pick) return std::nullopt;
  std::vector<int> labels = previous.labels;
  labels[*pick] = K;
  return labels;
}

}  // namespace projclust
