#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "projclust/errors.hpp"
#include "projclust/synthgen.hpp"

using namespace projclust;

namespace {

struct FreqFit {
  int w1 = 0;
  int w2 = 0;
  double sse = std::numeric_limits<double>::infinity();
};

// Recovers the subject's frequency pair by trying all nine combinations with
// the group's known coefficients.
FreqFit recover(const SubjectRecord& s, double c1, double c2) {
  FreqFit best;
  for (int w1 : {1, 2, 3}) {
    for (int w2 : {7, 8, 9}) {
      double sse = 0.0;
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double t = s.times[j];
        const double r = s.y[j] - c1 * std::cos(std::numbers::pi * w1 * t) - c2 * std::cos(std::numbers::pi * w2 * t);
        sse += r * r;
      }
      if (sse < best.sse) best = {w1, w2, sse};
    }
  }
  return best;
}

const double kCoef[4][2] = {{1.0, 1.0}, {1.0, 0.1}, {0.1, 1.0}, {0.1, 0.1}};

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("layout of the default dataset") {
    const auto d = generate_example1({.seed = 1});
    REQUIRE(d.data.num_subjects() == 40);
    REQUIRE(d.labels.size() == 40);
    for (int g = 1; g <= 4; ++g) CHECK(std::count(d.labels.begin(), d.labels.end(), g) == 10);
    CHECK(d.data.subjects[0].id == "g1_001");
    CHECK(d.data.subjects[39].id == "g4_010");
    for (const auto& s : d.data.subjects) {
      REQUIRE(s.size() == 40);
      CHECK(s.times.front() == doctest::Approx(1.0 / 40.0));
      CHECK(s.times.back() == 1.0);
    }
    CHECK_NOTHROW(d.data.validate());
  }

  TEST_CASE("zero noise reproduces the group coefficient table") {
    const auto d = generate_example1({.noise_var = 0.0, .seed = 2});
    std::set<int> lows, highs;
    for (std::size_t i = 0; i < d.data.num_subjects(); ++i) {
      const int g = d.labels[i] - 1;
      const auto fit = recover(d.data.subjects[i], kCoef[g][0], kCoef[g][1]);
      CHECK(fit.sse < 1e-20);
      lows.insert(fit.w1);
      highs.insert(fit.w2);
      if (g == 3) {
        for (double y : d.data.subjects[i].y) CHECK(std::abs(y) <= 0.2 + 1e-15);
      }
    }
    CHECK(lows.size() == 3);
    CHECK(highs.size() == 3);
  }

  TEST_CASE("residual variance matches the noise variance") {
    const auto d = generate_example1({.seed = 3});
    double sse = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < d.data.num_subjects(); ++i) {
      const int g = d.labels[i] - 1;
      sse += recover(d.data.subjects[i], kCoef[g][0], kCoef[g][1]).sse;
      count += d.data.subjects[i].size();
    }
    CHECK(std::abs(sse / count - 0.1) < 0.02);
  }

  TEST_CASE("fixed seed is deterministic and seeds differ") {
    const auto a = generate_example1({.seed = 4});
    const auto b = generate_example1({.seed = 4});
    const auto c = generate_example1({.seed = 5});
    bool differs = false;
    for (std::size_t i = 0; i < a.data.num_subjects(); ++i) {
      CHECK(a.data.subjects[i].y == b.data.subjects[i].y);
      differs = differs || a.data.subjects[i].y != c.data.subjects[i].y;
    }
    CHECK(differs);
  }

  TEST_CASE("invalid configurations") {
    CHECK_THROWS_AS(generate_example1({.n_per_group = 0}), ValidationError);
    CHECK_THROWS_AS(generate_example1({.T = 1}), ValidationError);
    CHECK_THROWS_AS(generate_example1({.noise_var = -0.1}), ValidationError);
  }
}
