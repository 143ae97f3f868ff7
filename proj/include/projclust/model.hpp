#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "projclust/basis.hpp"
#include "projclust/dataset.hpp"

namespace projclust {

enum class GPriorKind { FullInverseWishart, DiagonalInvGamma };

/// Conjugate priors for the Gaussian LMM:
///   beta ~ N(0, beta_var I), sigma2 ~ InvGamma(sigma2_shape, sigma2_rate),
///   G ~ InvWishart(iw_df, iw_scale)  or  G_kk ~ InvGamma(g_shape, g_rate).
/// iw_df and iw_scale default to q + 2 and I_q.
struct PriorSpec {
  double beta_var = 100.0;
  double sigma2_shape = 0.01;
  double sigma2_rate = 0.01;
  GPriorKind g_prior = GPriorKind::FullInverseWishart;
  std::optional<double> iw_df;
  std::optional<Eigen::MatrixXd> iw_scale;
  double g_shape = 0.01;
  double g_rate = 0.01;

  double iw_df_for(int q) const { return iw_df.value_or(q + 2.0); }
  Eigen::MatrixXd iw_scale_for(int q) const {
    return iw_scale.value_or(Eigen::MatrixXd::Identity(q, q));
  }
  void validate(int q) const;
};

/// Fixed effects: the basis (or a lone intercept when unset) followed by the
/// dataset covariates when `use_covariates` is set.
struct FixedEffectsSpec {
  std::optional<BasisSpec> basis;
  bool use_covariates = false;
};

struct ModelSpec {
  FixedEffectsSpec fixed;
  BasisSpec random;
  /// Sorted 0-based columns of Z whose random effects are shared with the replicate.
  std::vector<int> shared;
  PriorSpec priors;

  int num_random() const { return random.num_columns(); }
  int num_fixed(std::size_t num_covariates) const;
  /// Columns of Z not in `shared`, ascending.
  std::vector<int> complement() const;
  void validate() const;
};

/// Throws ValidationError unless `shared` is a nonempty, strictly increasing
/// subset of [0, q).
void validate_shared_set(std::span<const int> shared, int q);

struct SubjectDesign {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;
};

Eigen::MatrixXd fixed_design(const ModelSpec& spec, std::span<const double> times,
                             const Eigen::MatrixXd* covariates);
Eigen::MatrixXd random_design(const ModelSpec& spec, std::span<const double> times);

/// Per-subject (y_i, X_i, Z_i), in dataset order.
std::vector<SubjectDesign> build_designs(const LongitudinalDataset& ds, const ModelSpec& spec);

}  // namespace projclust
