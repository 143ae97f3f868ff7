#include "projclust/evaluation.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <utility>

#include "projclust/errors.hpp"

namespace projclust {
namespace {

void check_pair(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("labelings differ in length");
  if (a.size() < 2) throw ValidationError("need at least two labels");
}

double choose2(double m) { return 0.5 * m * (m - 1.0); }

bool same_partition(std::span<const int> a, std::span<const int> b) {
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it1, new1] = ab.try_emplace(a[i], b[i]);
    auto [it2, new2] = ba.try_emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

Eigen::MatrixXd coincidence(std::span<const std::vector<int>> labelings) {
  if (labelings.empty()) throw ValidationError("coincidence: no partitions");
  const auto n = labelings.front().size();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& z : labelings) {
    if (z.size() != n) throw ValidationError("coincidence: partitions cover different numbers of subjects");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (z[i] == z[j]) counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1.0;
      }
    }
  }
  const auto S = static_cast<double>(labelings.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < out.cols(); ++j) {
      out(i, j) = out(j, i) = counts(i, j) / S;
    }
  }
  return out;
}

ThresholdSummary threshold_summary(const Eigen::MatrixXd& m, double lower, double upper) {
  ThresholdSummary s{lower, upper, 0, 0, 0};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      ++s.pairs;
      if (m(i, j) > upper) {
        ++s.solid;
      } else if (m(i, j) > lower) {
        ++s.weak;
      }
    }
  }
  return s;
}

double rand_index(std::span<const int> a, std::span<const int> b) {
  check_pair(a, b);
  const std::size_t n = a.size();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
    }
  }
  return static_cast<double>(agree) / choose2(static_cast<double>(n));
}

double adjusted_rand(std::span<const int> a, std::span<const int> b) {
  check_pair(a, b);
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, c] : cells) index += choose2(c);
  for (const auto& [key, c] : rows) sum_rows += choose2(c);
  for (const auto& [key, c] : cols) sum_cols += choose2(c);
  const double expected = sum_rows * sum_cols / choose2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) {
    std::clog << "warning: adjusted Rand index undefined for these partitions\n";
    return same_partition(a, b) ? 1.0 : 0.0;
  }
  return (index - expected) / (max_index - expected);
}

IndexSummary summarize_indices(std::span<const std::vector<int>> labelings, std::span<const int> truth) {
  if (labelings.empty()) throw ValidationError("summarize_indices: no partitions");
  std::vector<double> rand, ari;
  for (const auto& z : labelings) {
    rand.push_back(rand_index(z, truth));
    ari.push_back(adjusted_rand(z, truth));
  }
  const auto [rm, rs] = mean_sd(rand);
  const auto [am, as] = mean_sd(ari);
  return {rm, rs, am, as};
}

}  // namespace projclust
