#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace projclust {

enum class BasisKind { FourierCosine, CubicBSpline };

/// Builder for design-matrix rows evaluated at standardized times.
///
/// FourierCosine: columns cos(pi j t) for j = 0..order (order + 1 columns,
/// column 0 is the intercept).
/// CubicBSpline: `order` clamped uniform B-spline functions of the given
/// degree; with `intercept` a column of ones is prepended, so column k >= 1
/// is the k-th spline function.
struct BasisSpec {
  BasisKind kind = BasisKind::FourierCosine;
  int order = 9;
  int degree = 3;
  bool intercept = false;

  int num_columns() const;
  Eigen::MatrixXd design(std::span<const double> points) const;
  void validate() const;
};

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

/// n x (J + 1) matrix with entry (r, j) = cos(pi j t_r).
Eigen::MatrixXd fourier_design(std::span<const double> times, int J);

/// n x num_basis B-spline design on a clamped uniform knot vector over [0, 1],
/// evaluated with the Cox-de Boor recursion. Rows form a partition of unity.
Eigen::MatrixXd bspline_design(std::span<const double> points, int num_basis, int degree = 3);

/// Clamped uniform knot vector used by `bspline_design` (num_basis + degree + 1 knots).
std::vector<double> clamped_uniform_knots(int num_basis, int degree);

/// Power spectrum of `signal` at bins k = 1..n_freq:
///   DFT(k) = sum_j Y(j) exp(-2 pi i (j-1)(k-1) / J),
///   PS(k)  = |mean of DFT(m) over integer bins m with |m - k| <= h|^2.
/// With h = 0.5 this is the periodogram |DFT(k)|^2.
std::vector<double> power_spectrum(std::span<const double> signal, int n_freq = 40, double h = 0.5);

}  // namespace projclust
