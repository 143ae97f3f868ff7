#include "projclust/linalg.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "projclust/errors.hpp"

namespace projclust {
namespace {

std::atomic<std::uint64_t> g_jitter_events{0};

bool factor_ok(const Eigen::LLT<MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return false;
  }
  return true;
}

}  // namespace

Eigen::LLT<MatrixXd> robust_llt(const MatrixXd& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw ValidationError(std::string(what) + ": matrix is not square");
  }
  Eigen::LLT<MatrixXd> llt(m);
  if (m.rows() == 0 || factor_ok(llt)) return llt;

  ++g_jitter_events;
  double step = kJitterScale * m.trace() / static_cast<double>(m.rows());
  if (!(step > 0.0) || !std::isfinite(step)) step = kJitterScale;
  MatrixXd jittered = m;
  for (int attempt = 0; attempt < kJitterRetries; ++attempt) {
    jittered.diagonal().array() += step;
    llt.compute(jittered);
    if (factor_ok(llt)) return llt;
  }
  throw NumericalError(std::string(what) + ": Cholesky factorization failed after " +
                       std::to_string(kJitterRetries) + " jitter retries");
}

std::uint64_t jitter_event_count() { return g_jitter_events.load(); }
void reset_jitter_event_count() { g_jitter_events = 0; }

MatrixXd select_columns(const MatrixXd& m, std::span<const int> indices) {
  MatrixXd out(m.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) out.col(c) = m.col(indices[c]);
  return out;
}

VectorXd select_entries(const VectorXd& v, std::span<const int> indices) {
  VectorXd out(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) out(k) = v(indices[k]);
  return out;
}

MatrixXd select_block(const MatrixXd& m, std::span<const int> rows, std::span<const int> cols) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  }
  return out;
}

}  // namespace projclust
