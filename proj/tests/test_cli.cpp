#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "projclust/commands.hpp"
#include "projclust/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("projclust_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(PROJCLUST_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().filename().string()] = slurp(e.path());
  }
  return out;
}

void write_config(const fs::path& p, const json& j) {
  std::ofstream(p) << j.dump(2);
}

json small_fit_config() {
  return json{{"basis", {{"kind", "fourier"}, {"order", 9}}},
              {"shared", "low:0..3"},
              {"mcmc", {{"chains", 2}, {"iter", 60}, {"burn_in", 30}}},
              {"cluster", {{"restarts", 3}}},
              {"selection", {{"method", "both"}, {"B", 5}, {"k_max", 5}, {"S", 10}}}};
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate writes 40 subjects by 40 times, reproducibly") {
    const auto a = scratch("sim_a"), b = scratch("sim_b");
    REQUIRE(run("simulate --seed 5 --out " + a.string()) == 0);
    REQUIRE(run("simulate --seed 5 --out " + b.string()) == 0);
    const std::string data = slurp(a / "data.csv");
    CHECK(count_lines(data) == 1 + 40 * 40);
    CHECK(count_lines(slurp(a / "labels.csv")) == 41);
    CHECK(snapshot(a) == snapshot(b));
    REQUIRE(run("simulate --seed 6 --out " + b.string()) == 0);
    CHECK(slurp(b / "data.csv") != data);
  }

  TEST_CASE("simulate rejects an empty group size") {
    const auto dir = scratch("sim_bad");
    write_config(dir / "c.json", {{"simulate", {{"n_per_group", 0}}}});
    CHECK(run("simulate --config " + (dir / "c.json").string() + " --out " + dir.string()) == 2);
  }

  TEST_CASE("usage errors") {
    const auto dir = scratch("usage");
    CHECK(run("") != 0);
    CHECK(run("bogus") != 0);
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(run("simulate --config " + (dir / "broken.json").string()) == 2);
    CHECK(run("fit --input " + (dir / "missing.csv").string() + " --out " + dir.string()) == 4);
    write_config(dir / "both.json", {{"cluster", {{"k", 3}}}, {"selection", {{"method", "kl"}}}});
    CHECK(run("cluster --config " + (dir / "both.json").string() + " --out " + dir.string()) == 2);
  }

  TEST_CASE("fit, cluster and evaluate") {
    const auto dir = scratch("pipeline");
    REQUIRE(run("simulate --seed 2 --out " + dir.string()) == 0);
    const auto cfg = dir / "c.json";
    write_config(cfg, small_fit_config());
    const std::string common = "--config " + cfg.string() + " --out " + dir.string();
    REQUIRE(run("fit " + common + " --input " + (dir / "data.csv").string()) == 0);
    const std::string draws = slurp(dir / "draws.jsonl");
    CHECK(count_lines(draws) == 1 + 2 * 30);
    const auto diag = json::parse(slurp(dir / "diagnostics.json"));
    CHECK(diag.at("parameters").at(0).contains("split_rhat"));

    // Existing draws are never overwritten silently.
    CHECK(run("fit " + common + " --input " + (dir / "data.csv").string() + " --seed 9") != 0);
    CHECK(slurp(dir / "draws.jsonl") == draws);
    CHECK(run("fit " + common + " --input " + (dir / "data.csv").string() + " --seed 9 --force") == 0);
    CHECK(slurp(dir / "draws.jsonl") != draws);

    // K = n puts every subject alone: every objective vanishes.
    REQUIRE(run("cluster " + common + " --k 40") == 0);
    std::ifstream parts(dir / "partitions.jsonl");
    std::string line;
    std::getline(parts, line);
    std::size_t records = 0;
    while (std::getline(parts, line)) {
      const auto rec = json::parse(line);
      CHECK(rec.at("objective").get<double>() <= 1e-10);
      CHECK(rec.at("K").get<int>() == 40);
      ++records;
    }
    CHECK(records == 60);

    // Distinct labels agree with all-singleton partitions.
    {
      std::ofstream lab(dir / "distinct.csv");
      lab << "subject,label\n";
      const auto ds = projclust::load_csv(dir / "data.csv");
      for (std::size_t i = 0; i < ds.num_subjects(); ++i) lab << ds.subjects[i].id << ',' << i + 1 << '\n';
    }
    REQUIRE(run("evaluate " + common + " --labels " + (dir / "distinct.csv").string()) == 0);
    const auto ev = json::parse(slurp(dir / "evaluation.json"));
    CHECK(ev.at("rand_mean").get<double>() == 1.0);
    CHECK(ev.at("ari_mean").get<double>() == 1.0);

    {
      std::ofstream lab(dir / "short.csv");
      lab << "subject,label\ng1_001,1\n";
    }
    CHECK(run("evaluate " + common + " --labels " + (dir / "short.csv").string()) == 2);

    REQUIRE(run("select-k " + common) == 0);
    const auto sel = json::parse(slurp(dir / "selected_k.json"));
    CHECK(sel.contains("kl"));
    CHECK(sel.contains("bootstrap"));
    CHECK(slurp(dir / "kl_curve.csv").rfind("K,KL_K\n", 0) == 0);
    CHECK(slurp(dir / "instability_curve.csv").rfind("K,I_K\n", 0) == 0);

    REQUIRE(run("spectrum " + common + " --input " + (dir / "data.csv").string()) == 0);
    CHECK(count_lines(slurp(dir / "spectrum.csv")) == 1 + 40 * 40);
    CHECK(fs::exists(dir / "config.spectrum.json"));
  }

  TEST_CASE("shared columns outside the basis are a validation error") {
    const auto dir = scratch("shared_bad");
    REQUIRE(run("simulate --out " + dir.string()) == 0);
    CHECK(run("fit --shared 0,12 --input " + (dir / "data.csv").string() + " --out " + dir.string()) == 2);
    CHECK(run("fit --shared low:3..1 --input " + (dir / "data.csv").string() + " --out " + dir.string()) == 2);
  }

  TEST_CASE("outputs do not depend on the thread count") {
    const auto data = scratch("threads_data");
    REQUIRE(run("simulate --seed 3 --out " + data.string()) == 0);
    const auto cfg = data / "c.json";
    write_config(cfg, small_fit_config());
    std::map<std::string, std::string> reference;
    for (int threads : {1, 3}) {
      const auto out = scratch("threads_" + std::to_string(threads));
      const std::string common =
          "--config " + cfg.string() + " --out " + out.string() + " --threads " + std::to_string(threads);
      REQUIRE(run("fit " + common + " --input " + (data / "data.csv").string()) == 0);
      REQUIRE(run("select-k " + common) == 0);
      REQUIRE(run("cluster " + common + " --k 4") == 0);
      REQUIRE(run("evaluate " + common + " --k 4 --labels " + (data / "labels.csv").string()) == 0);
      const auto snap = snapshot(out);
      CHECK(snap.size() >= 10);
      if (threads == 1) reference = snap;
      else CHECK(snap == reference);
    }
  }

  TEST_CASE("parse_shared forms") {
    using projclust::parse_shared;
    CHECK(parse_shared("all", 4) == std::vector<int>{0, 1, 2, 3});
    CHECK(parse_shared("low:0..3", 10) == std::vector<int>{0, 1, 2, 3});
    CHECK(parse_shared("high:7..9", 10) == std::vector<int>{7, 8, 9});
    CHECK(parse_shared("5,1,3", 10) == std::vector<int>{1, 3, 5});
    CHECK_THROWS_AS(parse_shared("1,1", 10), projclust::ValidationError);
    CHECK_THROWS_AS(parse_shared("mid:4..6", 5), projclust::ValidationError);
    CHECK_THROWS_AS(parse_shared("x", 5), projclust::ValidationError);
  }

  TEST_CASE("config round trip keeps the hash") {
    auto c = projclust::RunConfig::from_json(small_fit_config());
    const auto back = projclust::RunConfig::from_json(c.to_json());
    CHECK(back.hash() == c.hash());
    c.threads = 7;
    c.out = "elsewhere";
    CHECK(c.hash() == back.hash());
    c.seed = 99;
    CHECK(c.hash() != back.hash());
  }
}
