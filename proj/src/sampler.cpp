#include "projclust/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "projclust/errors.hpp"
#include "projclust/linalg.hpp"
#include "projclust/parallel.hpp"
#include "projclust/replicate.hpp"

namespace projclust {
namespace {

enum StreamTag : std::uint64_t { kBetaStream = 1, kSigmaStream = 2, kGStream = 3, kSubjectStream = 4 };

std::vector<std::size_t> natural_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

std::vector<std::size_t> resolve(std::span<const std::size_t> order, std::size_t n) {
  if (order.empty()) return natural_order(n);
  return {order.begin(), order.end()};
}

/// mean + U^-1 z, where P = U'U: a draw from N(P^-1 rhs, P^-1).
Eigen::VectorXd gaussian_from_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs,
                                        Rng& rng, std::string_view what) {
  const auto llt = robust_llt(precision, what);
  Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd z = rng.normal_vector(rhs.size());
  return mean + llt.matrixU().solve(z);
}

}  // namespace

void McmcConfig::validate() const {
  if (n_chains < 1) throw ValidationError("mcmc: n_chains must be >= 1");
  if (n_iter < 1) throw ValidationError("mcmc: n_iter must be >= 1");
  if (burn_in < 0 || burn_in >= n_iter) throw ValidationError("mcmc: need 0 <= burn_in < n_iter");
  if (thin < 1) throw ValidationError("mcmc: thin must be >= 1");
}

namespace gibbs {

void update_beta(PosteriorDraw& state, std::span<const SubjectDesign> designs,
                 const PriorSpec& priors, Rng& rng, std::span<const std::size_t> order) {
  const auto p = state.beta.size();
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  for (std::size_t i : resolve(order, designs.size())) {
    const auto& d = designs[i];
    precision.noalias() += d.X.transpose() * d.X;
    rhs.noalias() += d.X.transpose() * (d.y - d.Z * state.b[i]);
  }
  precision /= state.sigma2;
  rhs /= state.sigma2;
  precision.diagonal().array() += 1.0 / priors.beta_var;
  state.beta = gaussian_from_precision(precision, rhs, rng, "beta conditional precision");
}

void update_random_effect(PosteriorDraw& state, std::size_t i, const SubjectDesign& design,
                          const Eigen::MatrixXd& chol_G, Rng& rng) {
  const Eigen::MatrixXd W = design.Z * chol_G.triangularView<Eigen::Lower>();
  Eigen::MatrixXd precision = W.transpose() * W / state.sigma2;
  precision.diagonal().array() += 1.0;
  const Eigen::VectorXd rhs = W.transpose() * (design.y - design.X * state.beta) / state.sigma2;
  const Eigen::VectorXd u = gaussian_from_precision(precision, rhs, rng, "random-effect conditional precision");
  state.b[i] = chol_G.triangularView<Eigen::Lower>() * u;
}

void update_sigma2(PosteriorDraw& state, std::span<const SubjectDesign> designs,
                   const PriorSpec& priors, Rng& rng, std::span<const std::size_t> order) {
  double sse = 0.0;
  double count = 0.0;
  for (std::size_t i : resolve(order, designs.size())) {
    const auto& d = designs[i];
    sse += (d.y - d.X * state.beta - d.Z * state.b[i]).squaredNorm();
    count += static_cast<double>(d.y.size());
  }
  const double shape = priors.sigma2_shape + 0.5 * count;
  const double rate = priors.sigma2_rate + 0.5 * sse;
  state.sigma2 = 1.0 / rng.gamma(shape, rate);
}

void update_G(PosteriorDraw& state, const PriorSpec& priors, Rng& rng,
              std::span<const std::size_t> order) {
  const auto q = static_cast<int>(state.G.rows());
  const auto n = state.b.size();
  const auto idx = resolve(order, n);
  if (priors.g_prior == GPriorKind::DiagonalInvGamma) {
    Eigen::VectorXd ss = Eigen::VectorXd::Zero(q);
    for (std::size_t i : idx) ss += state.b[i].array().square().matrix();
    state.G.setZero();
    for (int k = 0; k < q; ++k) {
      state.G(k, k) = 1.0 / rng.gamma(priors.g_shape + 0.5 * static_cast<double>(n),
                                      priors.g_rate + 0.5 * ss(k));
    }
    return;
  }
  Eigen::MatrixXd scale = priors.iw_scale_for(q);
  for (std::size_t i : idx) scale.noalias() += state.b[i] * state.b[i].transpose();
  state.G = sample_inverse_wishart(priors.iw_df_for(q) + static_cast<double>(n), scale, rng);
}

void cycle(PosteriorDraw& state, std::span<const SubjectDesign> designs, const PriorSpec& priors,
           Rng& beta_rng, std::span<Rng> subject_rngs, Rng& sigma_rng, Rng& g_rng,
           std::span<const std::size_t> order) {
  update_beta(state, designs, priors, beta_rng, order);
  const Eigen::MatrixXd chol_G = robust_llt(state.G, "random-effect covariance G").matrixL();
  for (std::size_t i : resolve(order, designs.size())) {
    update_random_effect(state, i, designs[i], chol_G, subject_rngs[i]);
  }
  update_sigma2(state, designs, priors, sigma_rng, order);
  update_G(state, priors, g_rng, order);
}

PosteriorDraw draw_prior(int p, int q, std::size_t n, const PriorSpec& priors, Rng& rng) {
  PosteriorDraw s;
  s.beta = std::sqrt(priors.beta_var) * rng.normal_vector(p);
  s.sigma2 = 1.0 / rng.gamma(priors.sigma2_shape, priors.sigma2_rate);
  if (priors.g_prior == GPriorKind::DiagonalInvGamma) {
    s.G = Eigen::MatrixXd::Zero(q, q);
    for (int k = 0; k < q; ++k) s.G(k, k) = 1.0 / rng.gamma(priors.g_shape, priors.g_rate);
  } else {
    s.G = sample_inverse_wishart(priors.iw_df_for(q), priors.iw_scale_for(q), rng);
  }
  const Eigen::MatrixXd chol_G = robust_llt(s.G, "prior G").matrixL();
  s.b.resize(n);
  for (auto& bi : s.b) bi = chol_G * rng.normal_vector(q);
  return s;
}

void redraw_data(std::span<SubjectDesign> designs, const PosteriorDraw& state, Rng& rng) {
  const double sd = std::sqrt(state.sigma2);
  for (std::size_t i = 0; i < designs.size(); ++i) {
    auto& d = designs[i];
    d.y = d.X * state.beta + d.Z * state.b[i] + sd * rng.normal_vector(d.X.rows());
  }
}

}  // namespace gibbs

Eigen::MatrixXd sample_inverse_wishart(double df, const Eigen::MatrixXd& scale, Rng& rng) {
  const auto q = scale.rows();
  if (!(df > static_cast<double>(q) - 1.0)) throw ValidationError("inverse Wishart: df must exceed q - 1");
  // A = T T' ~ Wishart(df, I); G = L A^-1 L' = (L T^-T)(L T^-T)'.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(q, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    T(k, k) = std::sqrt(rng.gamma(0.5 * (df - static_cast<double>(k)), 0.5));
    for (Eigen::Index j = k + 1; j < q; ++j) T(j, k) = rng.normal();
  }
  const Eigen::MatrixXd L = robust_llt(scale, "inverse-Wishart scale").matrixL();
  const Eigen::MatrixXd Mt = T.triangularView<Eigen::Lower>().solve(L.transpose());
  return symmetrize(Mt.transpose() * Mt);
}

std::vector<PosteriorDraw> gibbs_fit(const LongitudinalDataset& ds, const ModelSpec& spec,
                                     const McmcConfig& cfg, int threads) {
  cfg.validate();
  spec.validate();
  ds.validate();
  if (ds.num_subjects() == 0) throw ValidationError("gibbs_fit: dataset has no subjects");
  {
    std::set<std::string> ids;
    for (const auto& s : ds.subjects) {
      if (!ids.insert(s.id).second) throw ValidationError("gibbs_fit: duplicate subject id '" + s.id + "'");
    }
  }
  const auto designs = build_designs(ds, spec);
  const auto n = designs.size();
  const int p = static_cast<int>(designs.front().X.cols());
  const int q = spec.num_random();

  std::vector<std::size_t> order = natural_order(n);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ds.subjects[a].id < ds.subjects[b].id; });

  const auto per_chain = static_cast<std::size_t>(cfg.draws_per_chain());
  std::vector<PosteriorDraw> draws(per_chain * static_cast<std::size_t>(cfg.n_chains));

  parallel_for(static_cast<std::size_t>(cfg.n_chains), threads, [&](std::size_t chain) {
    Rng beta_rng = Rng::substream(cfg.seed, {chain, kBetaStream});
    Rng sigma_rng = Rng::substream(cfg.seed, {chain, kSigmaStream});
    Rng g_rng = Rng::substream(cfg.seed, {chain, kGStream});
    std::vector<Rng> subject_rngs;
    subject_rngs.reserve(n);
    for (const auto& s : ds.subjects) {
      subject_rngs.push_back(Rng::substream(cfg.seed, {chain, kSubjectStream, fnv1a(s.id)}));
    }

    PosteriorDraw state;
    state.beta = Eigen::VectorXd::Zero(p);
    state.sigma2 = 1.0;
    state.G = Eigen::MatrixXd::Identity(q, q);
    state.b.assign(n, Eigen::VectorXd::Zero(q));

    std::size_t kept = 0;
    for (int t = 0; t < cfg.n_iter; ++t) {
      gibbs::cycle(state, designs, spec.priors, beta_rng, subject_rngs, sigma_rng, g_rng, order);
      if (t >= cfg.burn_in && (t - cfg.burn_in + 1) % cfg.thin == 0 && kept < per_chain) {
        draws[chain * per_chain + kept++] = state;
      }
    }
  });
  return draws;
}

Eigen::VectorXd fitted_mean_replicate(const PosteriorDraw& draw, const ModelSpec& spec,
                                      std::size_t i, std::span<const double> times,
                                      const Eigen::MatrixXd* covariates) {
  if (i >= draw.b.size()) throw ValidationError("fitted_mean_replicate: subject index out of range");
  for (double t : times) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("fitted_mean_replicate: times must lie in [0, 1]");
  }
  const auto gp = partition_G(draw.G, spec.shared);
  const Eigen::MatrixXd X = fixed_design(spec, times, covariates);
  const Eigen::MatrixXd Z = random_design(spec, times);
  const Eigen::VectorXd b_A = select_entries(draw.b[i], gp.shared);
  Eigen::VectorXd mean = X * draw.beta + select_columns(Z, gp.shared) * b_A;
  if (!gp.complement.empty()) mean += select_columns(Z, gp.complement) * (gp.gain * b_A);
  return mean;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    if (half < 2) continue;
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  if (halves.size() < 2) return std::nan("");
  const auto len = static_cast<double>(halves.front().size());
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    const double m = std::accumulate(h.begin(), h.end(), 0.0) / len;
    double v = 0.0;
    for (double x : h) v += (x - m) * (x - m);
    means.push_back(m);
    vars.push_back(v / (len - 1.0));
  }
  const auto m = static_cast<double>(halves.size());
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= len / (m - 1.0);
  const double within = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (!(within > 0.0)) return std::nan("");
  const double var_plus = (len - 1.0) / len * within + between / len;
  return std::sqrt(var_plus / within);
}

}  // namespace projclust
