#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace projclust {

/// Observations for one subject, sorted by time.
struct SubjectRecord {
  std::string id;
  std::vector<double> times;
  std::vector<double> y;
  /// n_i x m extra fixed-effect columns; m may be zero.
  Eigen::MatrixXd covariates;

  std::size_t size() const { return times.size(); }
};

struct LongitudinalDataset {
  std::vector<SubjectRecord> subjects;
  std::vector<std::string> covariate_names;

  std::size_t num_subjects() const { return subjects.size(); }
  std::size_t num_covariates() const { return covariate_names.size(); }
  std::size_t total_observations() const;

  /// Throws ValidationError unless every subject has n_i >= 1, strictly
  /// increasing times and the shared covariate width.
  void validate() const;
};

/// Long-format CSV: header `subject,time,y[,x1,...,xm]`, one row per
/// observation. Rows may arrive in any order; subjects keep the order of
/// their first appearance.
LongitudinalDataset read_csv(std::istream& in, const std::string& source = "<stream>");
LongitudinalDataset load_csv(const std::filesystem::path& path);

/// Shortest round-trip formatting, so read_csv(write_csv(ds)) == ds.
void write_csv(const LongitudinalDataset& ds, std::ostream& out);
void write_csv(const LongitudinalDataset& ds, const std::filesystem::path& path);

/// Affine maps applied by `standardize`: t' = (t - time_offset) / time_scale,
/// y' = (y - y_mean) / y_sd.
struct ScaleTransform {
  double time_offset = 0.0;
  double time_scale = 1.0;
  double y_mean = 0.0;
  double y_sd = 1.0;

  double time_to_raw(double t) const { return time_offset + time_scale * t; }
  double y_to_raw(double y) const { return y_mean + y_sd * y; }
};

struct StandardizedDataset {
  LongitudinalDataset data;
  ScaleTransform transform;
};

/// Pooled scaling: times to [0, 1], responses to mean 0 and variance 1
/// (denominator N - 1). Covariates are left as given.
StandardizedDataset standardize(const LongitudinalDataset& ds);

/// Sorted distinct observation times across all subjects.
std::vector<double> union_times(const LongitudinalDataset& ds);

std::string format_double(double v);

}  // namespace projclust
