#include "projclust/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "projclust/errors.hpp"

namespace projclust {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view field, const std::string& source, std::size_t line,
                    std::string_view column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(source, line, "column '" + std::string(column) + "' is not a number: '" +
                                       std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(source, line, "column '" + std::string(column) + "' is not finite");
  }
  return value;
}

struct Row {
  double time;
  double y;
  std::vector<double> x;
  std::size_t line;
};

}  // namespace

std::size_t LongitudinalDataset::total_observations() const {
  std::size_t total = 0;
  for (const auto& s : subjects) total += s.size();
  return total;
}

void LongitudinalDataset::validate() const {
  const auto m = static_cast<Eigen::Index>(num_covariates());
  for (const auto& s : subjects) {
    if (s.times.empty()) throw ValidationError("subject '" + s.id + "' has no observations");
    if (s.y.size() != s.times.size()) {
      throw ValidationError("subject '" + s.id + "': times and y differ in length");
    }
    for (std::size_t j = 1; j < s.times.size(); ++j) {
      if (!(s.times[j - 1] < s.times[j])) {
        throw ValidationError("subject '" + s.id + "': times are not strictly increasing");
      }
    }
    if (s.covariates.cols() != m ||
        (m > 0 && s.covariates.rows() != static_cast<Eigen::Index>(s.size()))) {
      throw ValidationError("subject '" + s.id + "': covariate shape mismatch");
    }
  }
}

LongitudinalDataset read_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (auto f : split_fields(line)) header.emplace_back(f);
    have_header = true;
    break;
  }
  if (!have_header) throw ValidationError(source + ": empty file");
  if (header.size() < 3 || header[0] != "subject" || header[1] != "time" || header[2] != "y") {
    throw ParseError(source, line_no, "header must start with subject,time,y");
  }

  LongitudinalDataset ds;
  ds.covariate_names.assign(header.begin() + 3, header.end());
  const std::size_t width = header.size();

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw ParseError(source, line_no, "expected " + std::to_string(width) + " fields, got " +
                                            std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError(source, line_no, "empty subject id");
    Row row{parse_number(fields[1], source, line_no, "time"),
            parse_number(fields[2], source, line_no, "y"),
            {},
            line_no};
    for (std::size_t c = 3; c < width; ++c) {
      row.x.push_back(parse_number(fields[c], source, line_no, header[c]));
    }
    std::string id(fields[0]);
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(std::move(row));
  }
  if (order.empty()) throw ValidationError(source + ": no data rows");

  const auto m = static_cast<Eigen::Index>(ds.covariate_names.size());
  for (const auto& id : order) {
    auto& subject_rows = rows.at(id);
    std::stable_sort(subject_rows.begin(), subject_rows.end(),
                     [](const Row& a, const Row& b) { return a.time < b.time; });
    SubjectRecord rec;
    rec.id = id;
    rec.covariates.resize(static_cast<Eigen::Index>(subject_rows.size()), m);
    for (std::size_t r = 0; r < subject_rows.size(); ++r) {
      const auto& row = subject_rows[r];
      if (r > 0 && row.time == subject_rows[r - 1].time) {
        throw ValidationError(source + ":" + std::to_string(row.line) + ": duplicate time " +
                              format_double(row.time) + " for subject '" + id + "'");
      }
      rec.times.push_back(row.time);
      rec.y.push_back(row.y);
      for (Eigen::Index c = 0; c < m; ++c) rec.covariates(static_cast<Eigen::Index>(r), c) = row.x[c];
    }
    ds.subjects.push_back(std::move(rec));
  }
  ds.validate();
  return ds;
}

LongitudinalDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_csv(in, path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_csv(const LongitudinalDataset& ds, std::ostream& out) {
  out << "subject,time,y";
  for (const auto& name : ds.covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& s : ds.subjects) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      out << s.id << ',' << format_double(s.times[j]) << ',' << format_double(s.y[j]);
      for (Eigen::Index c = 0; c < s.covariates.cols(); ++c) {
        out << ',' << format_double(s.covariates(static_cast<Eigen::Index>(j), c));
      }
      out << '\n';
    }
  }
}

void write_csv(const LongitudinalDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_csv(ds, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

StandardizedDataset standardize(const LongitudinalDataset& ds) {
  ds.validate();
  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : ds.subjects) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      t_min = std::min(t_min, s.times[j]);
      t_max = std::max(t_max, s.times[j]);
      sum += s.y[j];
      ++count;
    }
  }
  if (count < 2) throw ValidationError("standardize: need at least two observations");
  if (!(t_max > t_min)) throw ValidationError("standardize: degenerate time scale (all times equal)");
  const double mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (const auto& s : ds.subjects) {
    for (double y : s.y) ss += (y - mean) * (y - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(count - 1));
  if (!(sd > 0.0)) throw ValidationError("standardize: degenerate response scale (all y equal)");

  StandardizedDataset out{ds, {t_min, t_max - t_min, mean, sd}};
  for (auto& s : out.data.subjects) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      s.times[j] = (s.times[j] - t_min) / (t_max - t_min);
      s.y[j] = (s.y[j] - mean) / sd;
    }
  }
  return out;
}

std::vector<double> union_times(const LongitudinalDataset& ds) {
  std::vector<double> all;
  for (const auto& s : ds.subjects) all.insert(all.end(), s.times.begin(), s.times.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

}  // namespace projclust
