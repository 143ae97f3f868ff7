#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "projclust/errors.hpp"
#include "projclust/replicate.hpp"
#include "projclust/rng.hpp"

using namespace projclust;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_spd(int q, Rng& rng) {
  MatrixXd A(q, q);
  for (int r = 0; r < q; ++r) {
    for (int c = 0; c < q; ++c) A(r, c) = rng.normal();
  }
  return A * A.transpose() + 0.5 * MatrixXd::Identity(q, q);
}

MatrixXd random_matrix(int r, int c, Rng& rng) {
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  }
  return m;
}

double rel_diff(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

// Gaussian log density with an explicit inverse and determinant.
double log_density(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov) {
  const VectorXd d = x - mean;
  const double quad = d.dot(cov.inverse() * d);
  return -0.5 * (quad + std::log(cov.determinant()) +
                 static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi));
}

}  // namespace

TEST_SUITE("replicate") {
  TEST_CASE("partition_G with identity G has zero gain") {
    const std::vector<int> shared{0, 2};
    const auto gp = partition_G(MatrixXd::Identity(4, 4), shared);
    CHECK(gp.complement == std::vector<int>{1, 3});
    CHECK(gp.gain.rows() == 2);
    CHECK(gp.gain.cols() == 2);
    CHECK(gp.gain.isZero());
    CHECK(gp.schur.isIdentity());
  }

  TEST_CASE("partition_G on a correlated 2x2") {
    MatrixXd G(2, 2);
    G << 2, 1, 1, 2;
    const std::vector<int> shared{0};
    const auto gp = partition_G(G, shared);
    CHECK(gp.gain(0, 0) == doctest::Approx(0.5));
    CHECK(gp.schur(0, 0) == doctest::Approx(1.5));
    const auto c = conditional_prior(gp, VectorXd::Constant(1, 4.0));
    CHECK(c.mean(0) == doctest::Approx(2.0));
    CHECK(c.cov(0, 0) == doctest::Approx(1.5));
  }

  TEST_CASE("partition_G with an empty complement") {
    Rng rng(1);
    const MatrixXd G = random_spd(3, rng);
    const std::vector<int> shared{0, 1, 2};
    const auto gp = partition_G(G, shared);
    CHECK(gp.complement.empty());
    CHECK(gp.gain.rows() == 0);
    CHECK(gp.schur.rows() == 0);
    SubjectDesign d{VectorXd::Zero(4), MatrixXd::Ones(4, 1), random_matrix(4, 3, rng)};
    const auto pred = replicate_predictive(d, VectorXd::Ones(1), 0.7, VectorXd::Ones(3), gp);
    CHECK(rel_diff(pred.cov, 0.7 * MatrixXd::Identity(4, 4)) < 1e-14);
    CHECK(rel_diff(pred.mean, (VectorXd::Ones(4) + d.Z * VectorXd::Ones(3)).eval()) < 1e-14);
  }

  TEST_CASE("partition_G rejects invalid shared sets") {
    const MatrixXd G = MatrixXd::Identity(3, 3);
    const std::vector<int> empty;
    CHECK_THROWS_AS(partition_G(G, empty), ValidationError);
    const std::vector<int> out_of_range{0, 3};
    CHECK_THROWS_AS(partition_G(G, out_of_range), ValidationError);
  }

  TEST_CASE("reassemble recovers G and blocks are symmetric") {
    Rng rng(2);
    for (int rep = 0; rep < 50; ++rep) {
      const int q = 2 + rep % 6;
      const MatrixXd G = random_spd(q, rng);
      std::vector<int> shared;
      for (int k = 0; k < q; ++k) {
        if (rng.uniform() < 0.5) shared.push_back(k);
      }
      if (shared.empty()) shared.push_back(q - 1);
      const auto gp = partition_G(G, shared);
      CHECK(rel_diff(gp.reassemble(), G) < 1e-14);
      CHECK(rel_diff(gp.schur, gp.schur.transpose()) < 1e-14);
      // Schur complement from an explicit inverse of the full matrix.
      if (!gp.complement.empty()) {
        const MatrixXd Ginv = G.inverse();
        MatrixXd Ginv_B(gp.complement.size(), gp.complement.size());
        for (std::size_t r = 0; r < gp.complement.size(); ++r) {
          for (std::size_t c = 0; c < gp.complement.size(); ++c) {
            Ginv_B(r, c) = Ginv(gp.complement[r], gp.complement[c]);
          }
        }
        CHECK(rel_diff(gp.schur, Ginv_B.inverse()) < 1e-9);
      }
    }
  }

  TEST_CASE("replicate covariance satisfies the law of total covariance") {
    Rng rng(3);
    for (int rep = 0; rep < 30; ++rep) {
      const int q = 3 + rep % 4, n = 2 + rep % 7;
      const MatrixXd G = random_spd(q, rng);
      const std::vector<int> shared{0, q - 1};
      const auto gp = partition_G(G, shared);
      SubjectDesign d{VectorXd::Zero(n), MatrixXd::Ones(n, 1), random_matrix(n, q, rng)};
      const double sigma2 = 0.3 + rng.uniform();
      const auto pred = replicate_predictive(d, VectorXd::Zero(1), sigma2, VectorXd::Zero(2), gp);
      const MatrixXd M = mean_loading(d, gp);
      const MatrixXd total = pred.cov + M * gp.G_A * M.transpose();
      const MatrixXd marginal = d.Z * G * d.Z.transpose() + sigma2 * MatrixXd::Identity(n, n);
      CHECK(rel_diff(total, marginal) < 1e-12);
      CHECK(rel_diff(pred.cov, pred.cov.transpose()) < 1e-15);
    }
  }

  TEST_CASE("predictive matches Monte Carlo marginalization over r_B") {
    Rng rng(4);
    const int q = 3, n = 3;
    const MatrixXd G = random_spd(q, rng);
    const std::vector<int> shared{1};
    const auto gp = partition_G(G, shared);
    SubjectDesign d{VectorXd::Zero(n), random_matrix(n, 2, rng), random_matrix(n, q, rng)};
    const VectorXd beta = random_matrix(2, 1, rng);
    const VectorXd b_A = VectorXd::Constant(1, 0.8);
    const double sigma2 = 0.4;
    const auto pred = replicate_predictive(d, beta, sigma2, b_A, gp);

    // Sample the joint (r_B, e) explicitly and integrate by simulation.
    const auto cond = conditional_prior(gp, b_A);
    const MatrixXd L = cond.cov.llt().matrixL();
    const MatrixXd Z_A = d.Z.col(1);
    MatrixXd Z_B(n, 2);
    Z_B << d.Z.col(0), d.Z.col(2);
    const int N = 1'000'000;
    VectorXd sum = VectorXd::Zero(n);
    MatrixXd outer = MatrixXd::Zero(n, n);
    Rng mc(40);
    for (int s = 0; s < N; ++s) {
      const VectorXd r_B = cond.mean + L * mc.normal_vector(2);
      const VectorXd y = d.X * beta + Z_A * b_A + Z_B * r_B + std::sqrt(sigma2) * mc.normal_vector(n);
      sum += y;
      outer += y * y.transpose();
    }
    const VectorXd mean = sum / N;
    const MatrixXd cov = outer / N - mean * mean.transpose();
    for (int r = 0; r < n; ++r) {
      const double scale = std::sqrt(pred.cov(r, r));
      CHECK(std::abs(mean(r) - pred.mean(r)) < 0.01 * std::max(scale, std::abs(pred.mean(r))));
      for (int c = 0; c < n; ++c) {
        const double s2 = std::sqrt(pred.cov(r, r) * pred.cov(c, c));
        CHECK(std::abs(cov(r, c) - pred.cov(r, c)) < 0.01 * s2);
      }
    }
  }

  TEST_CASE("projection_metric matches an explicit-inverse oracle") {
    Rng rng(5);
    for (int rep = 0; rep < 100; ++rep) {
      const int q = 2 + rep % 8;
      const int n = 1 + rep % 12;
      const MatrixXd G = random_spd(q, rng);
      std::vector<int> shared;
      for (int k = 0; k < q; k += 2) shared.push_back(k);
      const auto gp = partition_G(G, shared);
      SubjectDesign d{VectorXd::Zero(n), MatrixXd::Ones(n, 1), random_matrix(n, q, rng)};
      const double sigma2 = 0.05 + rng.uniform();
      const MatrixXd Qinv = projection_metric(d, sigma2, gp);

      const MatrixXd G_A = G(shared, shared);
      const MatrixXd G_AB = G(shared, gp.complement);
      const MatrixXd G_B = G(gp.complement, gp.complement);
      const MatrixXd gain = G_AB.transpose() * G_A.inverse();
      const MatrixXd schur = G_B - gain * G_AB;
      const MatrixXd Z_A = d.Z(Eigen::all, shared);
      const MatrixXd Z_B = d.Z(Eigen::all, gp.complement);
      const MatrixXd M = Z_A + Z_B * gain;
      const MatrixXd C = Z_B * schur * Z_B.transpose() + sigma2 * MatrixXd::Identity(n, n);
      const MatrixXd oracle = M.transpose() * C.inverse() * M;
      CHECK(rel_diff(Qinv, oracle) < 1e-8);
      CHECK((Qinv - Qinv.transpose()).norm() == 0.0);
      CHECK(Qinv.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() > -1e-10 * Qinv.norm());
    }
  }

  TEST_CASE("kl_term values") {
    const VectorXd b = VectorXd::Constant(2, 1.5);
    CHECK(kl_term(b, b, MatrixXd::Identity(2, 2)) == 0.0);
    VectorXd d(2);
    d << 0.5, -0.5;
    CHECK(kl_term(b, d, MatrixXd::Identity(2, 2)) == doctest::Approx(0.5 * (1.0 + 4.0)));
    MatrixXd Q(2, 2);
    Q << 2, 1, 1, 3;
    VectorXd delta = b - d;
    CHECK(kl_term(b, d, Q) == doctest::Approx(0.5 * delta.dot(Q * delta)));
    const VectorXd one = VectorXd::Ones(1), zero = VectorXd::Zero(1);
    CHECK(kl_term(one, zero, MatrixXd::Constant(1, 1, -1e-13)) == 0.0);
    CHECK_THROWS_AS(kl_term(one, zero, MatrixXd::Constant(1, 1, -1.0)), NumericalError);
  }

  TEST_CASE("kl_term agrees with a Monte Carlo KL between replicate densities") {
    Rng rng(6);
    const int q = 4, n = 5;
    const MatrixXd G = random_spd(q, rng);
    const std::vector<int> shared{0, 2};
    const auto gp = partition_G(G, shared);
    SubjectDesign d{VectorXd::Zero(n), MatrixXd::Ones(n, 1), random_matrix(n, q, rng)};
    const VectorXd beta = VectorXd::Constant(1, 0.2);
    const double sigma2 = 0.5;
    VectorXd b_A(2), c(2);
    b_A << 0.4, -0.3;
    c << 0.1, 0.2;
    const auto p = replicate_predictive(d, beta, sigma2, b_A, gp);
    const auto r = replicate_predictive(d, beta, sigma2, c, gp);
    const double exact = kl_term(b_A, c, projection_metric(d, sigma2, gp));

    const MatrixXd L = p.cov.llt().matrixL();
    const int N = 200'000;
    double sum = 0.0, sum2 = 0.0;
    Rng mc(60);
    for (int s = 0; s < N; ++s) {
      const VectorXd y = p.mean + L * mc.normal_vector(n);
      const double v = log_density(y, p.mean, p.cov) - log_density(y, r.mean, r.cov);
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / N;
    const double se = std::sqrt((sum2 / N - mean * mean) / N);
    CHECK(exact > 0.0);
    CHECK(std::abs(mean - exact) < 4.0 * se);
  }

  TEST_CASE("projection_inputs extracts shared effects per subject") {
    Rng rng(7);
    const int q = 3;
    PosteriorDraw draw;
    draw.beta = VectorXd::Zero(1);
    draw.sigma2 = 0.3;
    draw.G = random_spd(q, rng);
    std::vector<SubjectDesign> designs;
    for (int i = 0; i < 4; ++i) {
      designs.push_back({VectorXd::Zero(3 + i), MatrixXd::Ones(3 + i, 1), random_matrix(3 + i, q, rng)});
      draw.b.push_back(random_matrix(q, 1, rng));
    }
    const std::vector<int> shared{1, 2};
    const auto in = projection_inputs(designs, draw, shared);
    REQUIRE(in.size() == 4);
    const auto gp = partition_G(draw.G, shared);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(in.b_A[i](0) == draw.b[i](1));
      CHECK(in.b_A[i](1) == draw.b[i](2));
      CHECK(rel_diff(in.Qinv[i], projection_metric(designs[i], draw.sigma2, gp)) < 1e-15);
      const auto pred = replicate_predictive(designs, draw, gp, i);
      CHECK(pred.mean.size() == static_cast<Eigen::Index>(3 + i));
    }
  }
}
