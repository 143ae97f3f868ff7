#include "projclust/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "projclust/errors.hpp"
#include "projclust/rng.hpp"

namespace projclust {

void SynthConfig::validate() const {
  if (n_per_group < 1) throw ValidationError("synth: n_per_group must be >= 1");
  if (T < 2) throw ValidationError("synth: T must be >= 2");
  if (!(noise_var >= 0.0)) throw ValidationError("synth: noise variance must be >= 0");
}

SynthData generate_example1(const SynthConfig& cfg) {
  cfg.validate();
  SynthData out;
  const double noise_sd = std::sqrt(cfg.noise_var);
  for (int g = 0; g < 4; ++g) {
    for (int k = 0; k < cfg.n_per_group; ++k) {
      Rng rng = Rng::substream(cfg.seed, {static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(k)});
      const int w1 = cfg.low_freqs[static_cast<std::size_t>(rng.uniform_int(0, 2))];
      const int w2 = cfg.high_freqs[static_cast<std::size_t>(rng.uniform_int(0, 2))];
      char id[32];
      std::snprintf(id, sizeof(id), "g%d_%03d", g + 1, k + 1);
      SubjectRecord rec;
      rec.id = id;
      for (int j = 1; j <= cfg.T; ++j) {
        const double t = static_cast<double>(j) / cfg.T;
        const double mean = cfg.coefficients[g][0] * std::cos(std::numbers::pi * w1 * t) +
                            cfg.coefficients[g][1] * std::cos(std::numbers::pi * w2 * t);
        rec.times.push_back(t);
        rec.y.push_back(mean + noise_sd * rng.normal());
      }
      rec.covariates.resize(cfg.T, 0);
      out.data.subjects.push_back(std::move(rec));
      out.labels.push_back(g + 1);
    }
  }
  return out;
}

}  // namespace projclust
