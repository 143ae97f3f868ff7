#include "projclust/selection.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

#include "projclust/errors.hpp"
#include "projclust/parallel.hpp"
#include "projclust/rng.hpp"

namespace projclust {

KlCurve kl_curve(std::span<const ProjectionInputs> draws, int K_max, const KlCurveOptions& opts) {
  if (draws.empty()) throw ValidationError("kl_curve: no draws");
  const auto n = draws.front().size();
  if (K_max < 1 || static_cast<std::size_t>(K_max) > n) {
    throw ValidationError("kl_curve: K_max must lie in [1, n]");
  }
  std::vector<std::vector<double>> per_draw(draws.size());
  parallel_for(draws.size(), opts.threads, [&](std::size_t s) {
    std::vector<double> objectives;
    std::optional<Partition> previous;
    for (int K = 1; K <= K_max; ++K) {
      ProjectionOptions po;
      po.n_restarts = opts.n_restarts;
      po.max_iter = opts.max_iter;
      po.seed = mix64(opts.seed ^ mix64(s));
      if (previous) po.init_labels = split_warm_start(draws[s], *previous);
      previous = project_cluster(draws[s], K, po);
      objectives.push_back(previous->objective);
    }
    per_draw[s] = std::move(objectives);
  });

  KlCurve curve;
  for (int K = 1; K <= K_max; ++K) {
    double sum = 0.0;
    for (const auto& obj : per_draw) sum += obj[static_cast<std::size_t>(K - 1)];
    curve.k.push_back(K);
    curve.kl.push_back(sum / static_cast<double>(per_draw.size()));
  }
  return curve;
}

std::vector<std::size_t> evenly_spaced(std::size_t available, std::size_t S) {
  if (S == 0 || S > available) throw ValidationError("need 1 <= S <= number of draws");
  std::vector<std::size_t> idx(S);
  for (std::size_t s = 0; s < S; ++s) idx[s] = s * available / S;
  return idx;
}

KlCurve kl_curve(std::span<const SubjectDesign> designs, std::span<const PosteriorDraw> draws,
                 const ModelSpec& spec, int K_max, std::size_t S, const KlCurveOptions& opts) {
  const auto idx = evenly_spaced(draws.size(), S);
  std::vector<ProjectionInputs> inputs(idx.size());
  parallel_for(idx.size(), opts.threads, [&](std::size_t s) {
    inputs[s] = projection_inputs(designs, draws[idx[s]], spec.shared);
  });
  return kl_curve(inputs, K_max, opts);
}

int choose_k_kl(const KlCurve& curve, double epsilon) {
  if (curve.k.empty() || curve.k.front() != 1) throw ValidationError("choose_k_kl: curve must start at K = 1");
  const double kl1 = curve.kl.front();
  if (!(kl1 > 0.0)) throw ValidationError("choose_k_kl: KL_1 = 0 (all subjects identical)");
  for (std::size_t j = 0; j < curve.k.size(); ++j) {
    if (curve.kl[j] / kl1 < epsilon) return curve.k[j];
  }
  return curve.k.back();
}

namespace {

ProjectionInputs euclidean_inputs(const Eigen::MatrixXd& rows, std::span<const std::size_t> pick) {
  ProjectionInputs in;
  const auto T = rows.cols();
  for (std::size_t r : pick) {
    in.b_A.push_back(rows.row(static_cast<Eigen::Index>(r)).transpose());
    in.Qinv.push_back(Eigen::MatrixXd::Identity(T, T));
  }
  return in;
}

std::vector<int> nearest_centroid(const Eigen::MatrixXd& rows, std::span<const Eigen::VectorXd> centroids) {
  std::vector<int> labels(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      const double dist = (rows.row(r).transpose() - centroids[j]).squaredNorm();
      if (dist < best) {
        best = dist;
        labels[static_cast<std::size_t>(r)] = static_cast<int>(j);
      }
    }
  }
  return labels;
}

Eigen::MatrixXd canonical_rows(const Eigen::MatrixXd& fitted) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(fitted.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < fitted.cols(); ++c) {
      if (fitted(a, c) != fitted(b, c)) return fitted(a, c) < fitted(b, c);
    }
    return false;
  });
  Eigen::MatrixXd out(fitted.rows(), fitted.cols());
  for (std::size_t r = 0; r < order.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = fitted.row(order[r]);
  return out;
}

double pair_disagreement(std::span<const int> a, std::span<const int> b) {
  const std::size_t n = a.size();
  std::size_t disagree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((a[i] == a[j]) != (b[i] == b[j])) ++disagree;
    }
  }
  return static_cast<double>(disagree) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace

double instability(const Eigen::MatrixXd& fitted, int K, const InstabilityOptions& opts) {
  const auto n = static_cast<std::size_t>(fitted.rows());
  if (n < 2) throw ValidationError("instability: need at least two rows");
  if (K < 1 || static_cast<std::size_t>(K) > n) throw ValidationError("instability: K must lie in [1, n]");
  if (opts.B < 1) throw ValidationError("instability: B must be >= 1");
  const Eigen::MatrixXd rows = canonical_rows(fitted);

  std::vector<double> values(static_cast<std::size_t>(opts.B));
  parallel_for(values.size(), opts.threads, [&](std::size_t b) {
    std::vector<int> labels[2];
    for (int side = 0; side < 2; ++side) {
      Rng rng = Rng::substream(opts.seed, {static_cast<std::uint64_t>(K), b, static_cast<std::uint64_t>(side)});
      std::vector<std::size_t> pick(n);
      for (auto& r : pick) r = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1));
      ProjectionOptions po;
      po.n_restarts = opts.n_restarts;
      po.max_iter = opts.max_iter;
      po.seed = rng.engine()();
      const auto part = project_cluster(euclidean_inputs(rows, pick), K, po);
      labels[side] = nearest_centroid(rows, part.centroids);
    }
    values[b] = pair_disagreement(labels[0], labels[1]);
  });
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

InstabilityCurve instability_curve(const Eigen::MatrixXd& fitted, int K_max, const InstabilityOptions& opts) {
  if (K_max < 2) throw ValidationError("instability_curve: K_max must be >= 2");
  InstabilityCurve curve;
  for (int K = 2; K <= K_max; ++K) {
    curve.k.push_back(K);
    curve.instability.push_back(instability(fitted, K, opts));
  }
  return curve;
}

BootstrapChoice choose_k_bootstrap(const InstabilityCurve& curve, int K_max) {
  double peak = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < curve.k.size(); ++j) {
    if (curve.k[j] < 2 || curve.k[j] > K_max) continue;
    peak = std::max(peak, curve.instability[j]);
    any = true;
  }
  if (!any) throw ValidationError("choose_k_bootstrap: curve has no K in [2, K_max]");
  if (!(peak > 0.0)) {
    std::clog << "warning: instability curve is identically zero; choosing K = 2\n";
    return {2, true};
  }
  for (std::size_t j = 0; j < curve.k.size(); ++j) {
    if (curve.k[j] < 2 || curve.k[j] > K_max) continue;
    if (curve.instability[j] >= 0.5 * peak) return {curve.k[j], false};
  }
  return {curve.k.back(), false};
}

Eigen::MatrixXd fitted_mean_matrix(const LongitudinalDataset& ds, const ModelSpec& spec,
                                   std::span<const PosteriorDraw> draws,
                                   std::span<const std::size_t> draw_indices,
                                   std::span<const double> times) {
  if (draw_indices.empty()) throw ValidationError("fitted_mean_matrix: no draws selected");
  if (spec.fixed.use_covariates && ds.num_covariates() > 0) {
    throw ValidationError("fitted means on a common time grid are unavailable for models with covariates");
  }
  const auto n = ds.num_subjects();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(times.size()));
  for (std::size_t s : draw_indices) {
    for (std::size_t i = 0; i < n; ++i) {
      out.row(static_cast<Eigen::Index>(i)) += fitted_mean_replicate(draws[s], spec, i, times).transpose();
    }
  }
  return out / static_cast<double>(draw_indices.size());
}

}  // namespace projclust
