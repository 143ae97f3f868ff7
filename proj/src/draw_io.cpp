#include "projclust/draw_io.hpp"

#include <fstream>

#include "projclust/errors.hpp"

namespace projclust {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void write_draws(const DrawFile& file, std::ostream& out) {
  const auto n = file.subjects.size();
  ordered_json header;
  header["format"] = "projclust-draws";
  header["version"] = 1;
  header["p"] = file.p;
  header["q"] = file.q;
  header["n"] = n;
  header["subjects"] = file.subjects;
  header["fields"] = {"beta", "sigma2", "G_lower", "b"};
  header["meta"] = file.meta;
  out << header.dump() << '\n';
  for (const auto& d : file.draws) {
    if (d.beta.size() != file.p || d.G.rows() != file.q || d.b.size() != n) {
      throw ValidationError("write_draws: draw shape does not match header");
    }
    ordered_json rec;
    rec["beta"] = std::vector<double>(d.beta.data(), d.beta.data() + d.beta.size());
    rec["sigma2"] = d.sigma2;
    std::vector<double> lower;
    for (int r = 0; r < file.q; ++r) {
      for (int c = 0; c <= r; ++c) lower.push_back(d.G(r, c));
    }
    rec["G_lower"] = lower;
    std::vector<double> b;
    b.reserve(n * static_cast<std::size_t>(file.q));
    for (const auto& bi : d.b) b.insert(b.end(), bi.data(), bi.data() + bi.size());
    rec["b"] = b;
    out << rec.dump() << '\n';
  }
}

void write_draws(const DrawFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_draws(file, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

DrawFile read_draws(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ValidationError(source + ": empty draw file");
  ++line_no;
  DrawFile file;
  try {
    const ordered_json header = ordered_json::parse(line);
    if (header.at("format") != "projclust-draws") throw ParseError(source, 1, "not a draw file");
    file.p = header.at("p").get<int>();
    file.q = header.at("q").get<int>();
    file.subjects = header.at("subjects").get<std::vector<std::string>>();
    if (header.contains("meta")) file.meta = header.at("meta");
  } catch (const json::exception& e) {
    throw ParseError(source, 1, e.what());
  }
  const auto n = file.subjects.size();
  const auto q = static_cast<std::size_t>(file.q);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      const auto beta = rec.at("beta").get<std::vector<double>>();
      const auto lower = rec.at("G_lower").get<std::vector<double>>();
      const auto b = rec.at("b").get<std::vector<double>>();
      if (beta.size() != static_cast<std::size_t>(file.p) || lower.size() != q * (q + 1) / 2 ||
          b.size() != n * q) {
        throw ParseError(source, line_no, "draw record has wrong field lengths");
      }
      PosteriorDraw d;
      d.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), file.p);
      d.sigma2 = rec.at("sigma2").get<double>();
      d.G.resize(file.q, file.q);
      std::size_t k = 0;
      for (int r = 0; r < file.q; ++r) {
        for (int c = 0; c <= r; ++c) d.G(r, c) = d.G(c, r) = lower[k++];
      }
      d.b.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        d.b.emplace_back(Eigen::Map<const Eigen::VectorXd>(b.data() + i * q, file.q));
      }
      file.draws.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return file;
}

DrawFile read_draws(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open draw file '" + path.string() + "'");
  return read_draws(in, path.string());
}

}  // namespace projclust
