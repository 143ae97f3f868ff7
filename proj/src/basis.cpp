#include "projclust/basis.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "projclust/errors.hpp"

namespace projclust {

int BasisSpec::num_columns() const {
  switch (kind) {
    case BasisKind::FourierCosine:
      return order + 1;
    case BasisKind::CubicBSpline:
      return order + (intercept ? 1 : 0);
  }
  return 0;
}

void BasisSpec::validate() const {
  if (kind == BasisKind::FourierCosine && order < 0) {
    throw ValidationError("Fourier basis order must be >= 0");
  }
  if (kind == BasisKind::CubicBSpline && (degree < 0 || order < degree + 1)) {
    throw ValidationError("B-spline basis needs num_basis >= degree + 1");
  }
}

Eigen::MatrixXd BasisSpec::design(std::span<const double> points) const {
  validate();
  if (kind == BasisKind::FourierCosine) return fourier_design(points, order);
  Eigen::MatrixXd splines = bspline_design(points, order, degree);
  if (!intercept) return splines;
  Eigen::MatrixXd out(splines.rows(), splines.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(splines.cols()) = splines;
  return out;
}

std::string to_string(BasisKind kind) {
  return kind == BasisKind::FourierCosine ? "fourier" : "bspline";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "fourier") return BasisKind::FourierCosine;
  if (name == "bspline") return BasisKind::CubicBSpline;
  throw ValidationError("unknown basis kind '" + name + "' (expected fourier or bspline)");
}

Eigen::MatrixXd fourier_design(std::span<const double> times, int J) {
  if (J < 0) throw ValidationError("fourier_design: J must be >= 0");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), J + 1);
  for (std::size_t r = 0; r < times.size(); ++r) {
    for (int j = 0; j <= J; ++j) {
      out(static_cast<Eigen::Index>(r), j) = std::cos(std::numbers::pi * j * times[r]);
    }
  }
  return out;
}

std::vector<double> clamped_uniform_knots(int num_basis, int degree) {
  const int interior = num_basis - degree - 1;
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(num_basis + degree + 1));
  for (int k = 0; k <= degree; ++k) knots.push_back(0.0);
  for (int k = 1; k <= interior; ++k) knots.push_back(static_cast<double>(k) / (interior + 1));
  for (int k = 0; k <= degree; ++k) knots.push_back(1.0);
  return knots;
}

Eigen::MatrixXd bspline_design(std::span<const double> points, int num_basis, int degree) {
  if (degree < 0 || num_basis < degree + 1) {
    throw ValidationError("bspline_design: num_basis must be >= degree + 1");
  }
  const auto knots = clamped_uniform_knots(num_basis, degree);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points.size()), num_basis);
  std::vector<double> left(degree + 1), right(degree + 1), values(degree + 1);

  for (std::size_t r = 0; r < points.size(); ++r) {
    const double x = points[r];
    if (!(x >= 0.0 && x <= 1.0)) {
      throw ValidationError("bspline_design: point " + std::to_string(x) + " outside [0, 1]");
    }
    // Knot span s with knots[s] <= x < knots[s + 1]; x = 1 belongs to the last span.
    int span = num_basis - 1;
    if (x < 1.0) {
      span = degree;
      while (knots[span + 1] <= x) ++span;
    }
    // Triangular Cox-de Boor evaluation of the degree + 1 nonzero functions.
    values[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
      left[j] = x - knots[span + 1 - j];
      right[j] = knots[span + j] - x;
      double saved = 0.0;
      for (int k = 0; k < j; ++k) {
        const double temp = values[k] / (right[k + 1] + left[j - k]);
        values[k] = saved + right[k + 1] * temp;
        saved = left[j - k] * temp;
      }
      values[j] = saved;
    }
    for (int k = 0; k <= degree; ++k) out(static_cast<Eigen::Index>(r), span - degree + k) = values[k];
  }
  return out;
}

std::vector<double> power_spectrum(std::span<const double> signal, int n_freq, double h) {
  const std::size_t len = signal.size();
  if (len == 0) throw ValidationError("power_spectrum: empty signal");
  if (n_freq < 1 || static_cast<std::size_t>(n_freq) > len) {
    throw ValidationError("power_spectrum: need 1 <= n_freq <= signal length");
  }
  if (!(h >= 0.0)) throw ValidationError("power_spectrum: h must be >= 0");

  std::vector<std::complex<double>> twiddle(len);
  for (std::size_t m = 0; m < len; ++m) {
    twiddle[m] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(m) /
                                     static_cast<double>(len));
  }
  const auto dft_bin = [&](long long bin) {
    const auto k = static_cast<std::uint64_t>(((bin % static_cast<long long>(len)) +
                                               static_cast<long long>(len)) %
                                              static_cast<long long>(len));
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < len; ++j) acc += signal[j] * twiddle[(j * k) % len];
    return acc;
  };

  std::vector<double> out(static_cast<std::size_t>(n_freq));
  for (int k = 0; k < n_freq; ++k) {
    const auto lo = static_cast<long long>(std::ceil(k - h));
    const auto hi = static_cast<long long>(std::floor(k + h));
    std::complex<double> sum = 0.0;
    long long count = 0;
    for (long long m = lo; m <= hi; ++m, ++count) sum += dft_bin(m);
    out[static_cast<std::size_t>(k)] = std::norm(sum / static_cast<double>(count));
  }
  return out;
}

}  // namespace projclust
