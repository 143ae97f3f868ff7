#include "projclust/replicate.hpp"

#include <algorithm>

#include "projclust/errors.hpp"
#include "projclust/linalg.hpp"

namespace projclust {

GPartition partition_G(const Eigen::MatrixXd& G, std::span<const int> shared) {
  const auto q = static_cast<int>(G.rows());
  if (G.cols() != q) throw ValidationError("partition_G: G must be square");
  validate_shared_set(shared, q);

  GPartition gp;
  gp.shared.assign(shared.begin(), shared.end());
  for (int c = 0; c < q; ++c) {
    if (!std::binary_search(gp.shared.begin(), gp.shared.end(), c)) gp.complement.push_back(c);
  }
  gp.G_A = select_block(G, gp.shared, gp.shared);
  gp.G_AB = select_block(G, gp.shared, gp.complement);
  gp.G_B = select_block(G, gp.complement, gp.complement);

  const auto llt = robust_llt(gp.G_A, "shared block G_A");
  // gain' = G_A^-1 G_AB
  gp.gain = llt.solve(gp.G_AB).transpose();
  gp.schur = symmetrize(gp.G_B - gp.gain * gp.G_AB);
  return gp;
}

Eigen::MatrixXd GPartition::reassemble() const {
  const auto q = static_cast<Eigen::Index>(shared.size() + complement.size());
  Eigen::MatrixXd G(q, q);
  for (std::size_t r = 0; r < shared.size(); ++r) {
    for (std::size_t c = 0; c < shared.size(); ++c) G(shared[r], shared[c]) = G_A(r, c);
    for (std::size_t c = 0; c < complement.size(); ++c) {
      G(shared[r], complement[c]) = G_AB(r, c);
      G(complement[c], shared[r]) = G_AB(r, c);
    }
  }
  for (std::size_t r = 0; r < complement.size(); ++r) {
    for (std::size_t c = 0; c < complement.size(); ++c) G(complement[r], complement[c]) = G_B(r, c);
  }
  return G;
}

Gaussian conditional_prior(const GPartition& gp, const Eigen::VectorXd& b_A) {
  if (b_A.size() != static_cast<Eigen::Index>(gp.shared.size())) {
    throw ValidationError("conditional_prior: b_A has wrong dimension");
  }
  return {gp.gain * b_A, gp.schur};
}

Eigen::MatrixXd mean_loading(const SubjectDesign& design, const GPartition& gp) {
  Eigen::MatrixXd M = select_columns(design.Z, gp.shared);
  if (!gp.complement.empty()) M += select_columns(design.Z, gp.complement) * gp.gain;
  return M;
}

namespace {

Eigen::MatrixXd replicate_covariance(const SubjectDesign& design, double sigma2, const GPartition& gp) {
  const auto n = design.Z.rows();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  if (!gp.complement.empty()) {
    const Eigen::MatrixXd Z_B = select_columns(design.Z, gp.complement);
    cov = Z_B * gp.schur * Z_B.transpose();
  }
  cov.diagonal().array() += sigma2;
  return symmetrize(cov);
}

}  // namespace

Gaussian replicate_predictive(const SubjectDesign& design, const Eigen::VectorXd& beta,
                              double sigma2, const Eigen::VectorXd& b_A, const GPartition& gp) {
  if (b_A.size() != static_cast<Eigen::Index>(gp.shared.size())) {
    throw ValidationError("replicate_predictive: b_A has wrong dimension");
  }
  return {design.X * beta + mean_loading(design, gp) * b_A, replicate_covariance(design, sigma2, gp)};
}

Gaussian replicate_predictive(std::span<const SubjectDesign> designs, const PosteriorDraw& draw,
                              const GPartition& gp, std::size_t i) {
  return replicate_predictive(designs[i], draw.beta, draw.sigma2, select_entries(draw.b[i], gp.shared), gp);
}

Eigen::MatrixXd projection_metric(const SubjectDesign& design, double sigma2, const GPartition& gp) {
  const Eigen::MatrixXd M = mean_loading(design, gp);
  const auto llt = robust_llt(replicate_covariance(design, sigma2, gp), "replicate covariance");
  const Eigen::MatrixXd W = llt.matrixL().solve(M);
  return W.transpose() * W;
}

double kl_term(const Eigen::VectorXd& b_A, const Eigen::VectorXd& d, const Eigen::MatrixXd& Qinv) {
  if (b_A.size() != d.size() || Qinv.rows() != d.size() || Qinv.cols() != d.size()) {
    throw ValidationError("kl_term: dimension mismatch");
  }
  const Eigen::VectorXd delta = d - b_A;
  const double kl = 0.5 * delta.dot(Qinv * delta);
  if (kl < -1e-12) throw NumericalError("kl_term: negative divergence " + std::to_string(kl));
  return std::max(kl, 0.0);
}

ProjectionInputs projection_inputs(std::span<const SubjectDesign> designs, const PosteriorDraw& draw,
                                   std::span<const int> shared) {
  const auto gp = partition_G(draw.G, shared);
  ProjectionInputs in;
  in.b_A.reserve(designs.size());
  in.Qinv.reserve(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i) {
    in.b_A.push_back(select_entries(draw.b[i], gp.shared));
    in.Qinv.push_back(projection_metric(designs[i], draw.sigma2, gp));
  }
  return in;
}

}  // namespace projclust
