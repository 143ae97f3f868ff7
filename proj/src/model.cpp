#include "projclust/model.hpp"

#include <algorithm>
#include <string>

#include "projclust/errors.hpp"

namespace projclust {

void PriorSpec::validate(int q) const {
  if (!(beta_var > 0.0)) throw ValidationError("prior: beta_var must be > 0");
  if (!(sigma2_shape > 0.0 && sigma2_rate > 0.0)) {
    throw ValidationError("prior: sigma2 shape and rate must be > 0");
  }
  if (g_prior == GPriorKind::DiagonalInvGamma) {
    if (!(g_shape > 0.0 && g_rate > 0.0)) throw ValidationError("prior: G shape and rate must be > 0");
    return;
  }
  if (!(iw_df_for(q) > q - 1)) throw ValidationError("prior: inverse-Wishart df must exceed q - 1");
  const Eigen::MatrixXd s = iw_scale_for(q);
  if (s.rows() != q || s.cols() != q) throw ValidationError("prior: inverse-Wishart scale must be q x q");
  if (!s.isApprox(s.transpose(), 1e-12)) throw ValidationError("prior: inverse-Wishart scale not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("prior: inverse-Wishart scale not positive definite");
  }
}

int ModelSpec::num_fixed(std::size_t num_covariates) const {
  const int base = fixed.basis ? fixed.basis->num_columns() : 1;
  return base + (fixed.use_covariates ? static_cast<int>(num_covariates) : 0);
}

std::vector<int> ModelSpec::complement() const {
  std::vector<int> out;
  for (int c = 0; c < num_random(); ++c) {
    if (!std::binary_search(shared.begin(), shared.end(), c)) out.push_back(c);
  }
  return out;
}

void validate_shared_set(std::span<const int> shared, int q) {
  if (shared.empty()) throw ValidationError("shared set A must be nonempty");
  for (std::size_t k = 0; k < shared.size(); ++k) {
    if (shared[k] < 0 || shared[k] >= q) {
      throw ValidationError("shared index " + std::to_string(shared[k]) + " outside [0, " +
                            std::to_string(q) + ")");
    }
    if (k > 0 && shared[k] <= shared[k - 1]) {
      throw ValidationError("shared set A must be strictly increasing");
    }
  }
}

void ModelSpec::validate() const {
  random.validate();
  if (fixed.basis) fixed.basis->validate();
  const int q = num_random();
  if (q < 1) throw ValidationError("random-effects basis has no columns");
  validate_shared_set(shared, q);
  priors.validate(q);
}

Eigen::MatrixXd fixed_design(const ModelSpec& spec, std::span<const double> times,
                             const Eigen::MatrixXd* covariates) {
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd base = spec.fixed.basis ? spec.fixed.basis->design(times)
                                          : Eigen::MatrixXd::Ones(n, 1);
  if (!spec.fixed.use_covariates || covariates == nullptr || covariates->cols() == 0) {
    if (spec.fixed.use_covariates && covariates == nullptr) {
      throw ValidationError("model uses covariates but none were supplied");
    }
    return base;
  }
  if (covariates->rows() != n) throw ValidationError("covariate rows do not match times");
  Eigen::MatrixXd out(n, base.cols() + covariates->cols());
  out << base, *covariates;
  return out;
}

Eigen::MatrixXd random_design(const ModelSpec& spec, std::span<const double> times) {
  return spec.random.design(times);
}

std::vector<SubjectDesign> build_designs(const LongitudinalDataset& ds, const ModelSpec& spec) {
  spec.validate();
  std::vector<SubjectDesign> out;
  out.reserve(ds.num_subjects());
  for (const auto& s : ds.subjects) {
    SubjectDesign d;
    d.y = Eigen::Map<const Eigen::VectorXd>(s.y.data(), static_cast<Eigen::Index>(s.y.size()));
    d.X = fixed_design(spec, s.times, &s.covariates);
    d.Z = random_design(spec, s.times);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace projclust
