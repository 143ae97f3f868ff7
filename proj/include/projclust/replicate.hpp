#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "projclust/model.hpp"
#include "projclust/sampler.hpp"

namespace projclust {

/// G split by the shared set A and its complement B.
struct GPartition {
  std::vector<int> shared;
  std::vector<int> complement;
  Eigen::MatrixXd G_A;
  Eigen::MatrixXd G_AB;
  Eigen::MatrixXd G_B;
  /// G_AB' G_A^-1, |B| x |A|.
  Eigen::MatrixXd gain;
  /// G_B - G_AB' G_A^-1 G_AB.
  Eigen::MatrixXd schur;

  /// G rebuilt from the blocks in the original column order.
  Eigen::MatrixXd reassemble() const;
};

GPartition partition_G(const Eigen::MatrixXd& G, std::span<const int> shared);

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// r_iB | b_iA ~ N(gain b_iA, schur).
Gaussian conditional_prior(const GPartition& gp, const Eigen::VectorXd& b_A);

/// Predictive density of the mixed replicate y_i* given b_iA and theta:
/// mean X beta + (Z_A + Z_B gain) b_iA, covariance Z_B schur Z_B' + sigma2 I.
Gaussian replicate_predictive(const SubjectDesign& design, const Eigen::VectorXd& beta,
                              double sigma2, const Eigen::VectorXd& b_A, const GPartition& gp);
Gaussian replicate_predictive(std::span<const SubjectDesign> designs, const PosteriorDraw& draw,
                              const GPartition& gp, std::size_t i);

/// Mean-loading matrix M_i = Z_iA + Z_iB gain.
Eigen::MatrixXd mean_loading(const SubjectDesign& design, const GPartition& gp);

/// Q_i^-1 = M_i' C_i^-1 M_i with C_i the replicate covariance, via a Cholesky
/// solve of C_i against M_i.
Eigen::MatrixXd projection_metric(const SubjectDesign& design, double sigma2, const GPartition& gp);

/// 0.5 (d - b_A)' Qinv (d - b_A). Values in (-1e-12, 0) are clamped to zero;
/// anything more negative raises NumericalError.
double kl_term(const Eigen::VectorXd& b_A, const Eigen::VectorXd& d, const Eigen::MatrixXd& Qinv);

/// Shared effects and metrics for every subject of one posterior draw; the
/// input of the projection step.
struct ProjectionInputs {
  std::vector<Eigen::VectorXd> b_A;
  std::vector<Eigen::MatrixXd> Qinv;

  std::size_t size() const { return b_A.size(); }
};

ProjectionInputs projection_inputs(std::span<const SubjectDesign> designs, const PosteriorDraw& draw,
                                   std::span<const int> shared);

}  // namespace projclust
