#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "projclust/sampler.hpp"

namespace projclust {

/// JSON-lines draw file. Line 1 is a header object:
///   {"format": "projclust-draws", "version": 1, "p", "q", "n", "subjects": [...],
///    "fields": ["beta", "sigma2", "G_lower", "b"], "meta": {...}}
/// followed by one object per draw with keys in the same order:
///   beta     p values
///   sigma2   scalar
///   G_lower  q(q+1)/2 values, lower triangle row by row (G(0,0), G(1,0), G(1,1), ...)
///   b        n*q values, b_1 then b_2 ...
struct DrawFile {
  std::vector<std::string> subjects;
  int p = 0;
  int q = 0;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  std::vector<PosteriorDraw> draws;
};

void write_draws(const DrawFile& file, std::ostream& out);
void write_draws(const DrawFile& file, const std::filesystem::path& path);
DrawFile read_draws(std::istream& in, const std::string& source = "<stream>");
DrawFile read_draws(const std::filesystem::path& path);

}  // namespace projclust
