#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace projclust {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Jitter policy shared by every Cholesky factorization in the library:
/// on failure add kJitterScale * trace/dim to the diagonal and retry, at most
/// kJitterRetries times, before raising NumericalError.
inline constexpr double kJitterScale = 1e-8;
inline constexpr int kJitterRetries = 3;

Eigen::LLT<MatrixXd> robust_llt(const MatrixXd& m, std::string_view what);

/// Number of factorizations that needed at least one jitter retry, process-wide.
std::uint64_t jitter_event_count();
void reset_jitter_event_count();

/// Columns of `m` at `indices`, in the given order.
MatrixXd select_columns(const MatrixXd& m, std::span<const int> indices);
VectorXd select_entries(const VectorXd& v, std::span<const int> indices);
MatrixXd select_block(const MatrixXd& m, std::span<const int> rows, std::span<const int> cols);

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace projclust
