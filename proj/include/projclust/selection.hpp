#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "projclust/dataset.hpp"
#include "projclust/model.hpp"
#include "projclust/projection.hpp"
#include "projclust/replicate.hpp"
#include "projclust/sampler.hpp"

namespace projclust {

/// Mean optimized KL objective per number of clusters, K = 1..K_max.
struct KlCurve {
  std::vector<int> k;
  std::vector<double> kl;
};

/// Mean bootstrap clustering instability per K = 2..K_max.
struct InstabilityCurve {
  std::vector<int> k;
  std::vector<double> instability;
};

struct KlCurveOptions {
  int n_restarts = 10;
  int max_iter = 100;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Projects every draw for K = 1..K_max, warm-starting K from the K - 1
/// solution split in two, and averages the optimized objectives over draws.
/// The warm start makes each per-draw objective nonincreasing in K.
KlCurve kl_curve(std::span<const ProjectionInputs> draws, int K_max, const KlCurveOptions& opts = {});

/// S draws spread evenly over `draws` (indices floor(s * N / S)).
std::vector<std::size_t> evenly_spaced(std::size_t available, std::size_t S);

KlCurve kl_curve(std::span<const SubjectDesign> designs, std::span<const PosteriorDraw> draws,
                 const ModelSpec& spec, int K_max, std::size_t S, const KlCurveOptions& opts = {});

/// Smallest K with KL_K / KL_1 < epsilon. Throws ValidationError when KL_1 = 0.
int choose_k_kl(const KlCurve& curve, double epsilon = 0.1);

struct InstabilityOptions {
  int B = 100;
  int n_restarts = 10;
  int max_iter = 100;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Bootstrap instability of Euclidean K-means on the rows of `fitted`
/// (subjects x grid points). For each of B replicates two bootstrap samples
/// are clustered, every original row is mapped to its nearest centroid under
/// both clusterings, and the fraction of the n(n-1)/2 pairs on which the two
/// disagree about co-membership is recorded; the result is the mean over B.
/// Rows are put in a canonical order first, so the value does not depend on
/// the row order of `fitted`.
double instability(const Eigen::MatrixXd& fitted, int K, const InstabilityOptions& opts = {});

InstabilityCurve instability_curve(const Eigen::MatrixXd& fitted, int K_max,
                                   const InstabilityOptions& opts = {});

struct BootstrapChoice {
  int k = 2;
  /// Every I_k was zero; k defaults to 2.
  bool degenerate = false;
};

/// K = min{k : I_k >= max_l I_l / 2} over 2 <= k <= K_max; K = 1 is never returned.
BootstrapChoice choose_k_bootstrap(const InstabilityCurve& curve, int K_max = 30);

/// n x |times| matrix of replicate fitted means, averaged over the draws at
/// `draw_indices`.
Eigen::MatrixXd fitted_mean_matrix(const LongitudinalDataset& ds, const ModelSpec& spec,
                                   std::span<const PosteriorDraw> draws,
                                   std::span<const std::size_t> draw_indices,
                                   std::span<const double> times);

}  // namespace projclust
