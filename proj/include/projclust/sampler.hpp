#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "projclust/dataset.hpp"
#include "projclust/model.hpp"
#include "projclust/rng.hpp"

namespace projclust {

struct McmcConfig {
  int n_chains = 4;
  int n_iter = 2000;
  int burn_in = 1000;
  int thin = 1;
  std::uint64_t seed = 0;

  int draws_per_chain() const { return (n_iter - burn_in) / thin; }
  void validate() const;
};

/// One sample of (beta, sigma2, G, b_1..b_n) from the LMM posterior.
struct PosteriorDraw {
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  Eigen::MatrixXd G;
  std::vector<Eigen::VectorXd> b;
};

/// Conditional kernels of the blocked Gibbs sampler for
/// y_i = X_i beta + Z_i b_i + e_i,  b_i ~ N(0, G),  e_i ~ N(0, sigma2 I).
/// Reductions over subjects run in `order` (all subjects in index order when
/// empty), which fixes the floating-point summation order.
namespace gibbs {

/// beta | rest ~ N(P^-1 r, P^-1), P = I/tau2 + sum X'X / sigma2, r = sum X'(y - Z b) / sigma2.
void update_beta(PosteriorDraw& state, std::span<const SubjectDesign> designs,
                 const PriorSpec& priors, Rng& rng, std::span<const std::size_t> order = {});

/// b_i | rest with precision G^-1 + Z'Z / sigma2, drawn in the whitened
/// coordinates u = L^-1 b (G = L L'), so G is never inverted.
void update_random_effect(PosteriorDraw& state, std::size_t i, const SubjectDesign& design,
                          const Eigen::MatrixXd& chol_G, Rng& rng);

/// sigma2 | rest ~ InvGamma(a0 + N/2, b0 + SSE/2).
void update_sigma2(PosteriorDraw& state, std::span<const SubjectDesign> designs,
                   const PriorSpec& priors, Rng& rng, std::span<const std::size_t> order = {});

/// G | b ~ InvWishart(nu0 + n, S0 + sum b b'), or per-component InvGamma.
void update_G(PosteriorDraw& state, const PriorSpec& priors, Rng& rng,
              std::span<const std::size_t> order = {});

/// One full cycle in the order beta, b_i, sigma2, G.
void cycle(PosteriorDraw& state, std::span<const SubjectDesign> designs, const PriorSpec& priors,
           Rng& beta_rng, std::span<Rng> subject_rngs, Rng& sigma_rng, Rng& g_rng,
           std::span<const std::size_t> order = {});

/// Exact joint draw of (beta, sigma2, G, b) from the prior.
PosteriorDraw draw_prior(int p, int q, std::size_t n, const PriorSpec& priors, Rng& rng);

/// y_i ~ N(X_i beta + Z_i b_i, sigma2 I), written into designs[i].y.
void redraw_data(std::span<SubjectDesign> designs, const PosteriorDraw& state, Rng& rng);

}  // namespace gibbs

/// Draw G ~ InvWishart(df, scale) through the Bartlett decomposition.
Eigen::MatrixXd sample_inverse_wishart(double df, const Eigen::MatrixXd& scale, Rng& rng);

/// Blocked Gibbs sampler. Returns n_chains * draws_per_chain() draws, chain-major.
/// Per-subject random streams are keyed by (seed, chain, subject id) and every
/// reduction runs in subject-id order, so the output does not depend on the
/// order of subjects in `ds` or on `threads`.
std::vector<PosteriorDraw> gibbs_fit(const LongitudinalDataset& ds, const ModelSpec& spec,
                                     const McmcConfig& cfg, int threads = 1);

/// Mean of the mixed predictive replicate for subject i on `times`:
/// X(t) beta + Z_A(t) b_iA + Z_B(t) G_AB' G_A^-1 b_iA.
Eigen::VectorXd fitted_mean_replicate(const PosteriorDraw& draw, const ModelSpec& spec,
                                      std::size_t i, std::span<const double> times,
                                      const Eigen::MatrixXd* covariates = nullptr);

/// Split-R-hat of a scalar across chains (each chain halved).
double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace projclust
