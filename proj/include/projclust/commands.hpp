#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "projclust/basis.hpp"
#include "projclust/model.hpp"
#include "projclust/sampler.hpp"
#include "projclust/synthgen.hpp"

namespace projclust {

struct SelectionConfig {
  /// "kl", "bootstrap" or "both".
  std::string method = "bootstrap";
  double epsilon = 0.1;
  int B = 100;
  int k_max = 30;
  /// Posterior draws used by the KL curve and averaged into the fitted means
  /// (the latter capped at 200).
  int S = 200;
};

/// Everything a command needs. Keys of the JSON form are documented in
/// docs/config.md.
struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path out = "out";
  std::filesystem::path draws;
  std::filesystem::path partitions;
  std::filesystem::path labels;
  std::uint64_t seed = 1;
  int threads = 1;
  bool force = false;

  BasisSpec basis;
  FixedEffectsSpec fixed;
  /// "all", "<name>:<first>..<last>" (e.g. "low:0..3") or a comma list "0,1,2".
  std::string shared = "all";
  PriorSpec priors;
  McmcConfig mcmc;

  std::optional<int> k;
  std::optional<SelectionConfig> selection;
  int restarts = 10;
  int max_iter = 100;
  std::optional<int> cluster_draws;

  SynthConfig synth;
  int n_freq = 40;
  double spectrum_h = 0.5;

  static RunConfig from_json(const nlohmann::json& j);
  /// Settings that determine command outputs; run-control fields (out,
  /// threads, force) are left out so they do not affect the hash.
  nlohmann::ordered_json to_json() const;
  std::string hash() const;

  ModelSpec model_spec() const;
  std::filesystem::path draws_path() const;
  std::filesystem::path partitions_path() const;
  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Parses a shared-set description into sorted 0-based column indices.
std::vector<int> parse_shared(std::string_view text, int q);

nlohmann::ordered_json model_to_json(const ModelSpec& spec);
ModelSpec model_from_json(const nlohmann::ordered_json& j);

/// Writes data.csv and labels.csv for the four-group synthetic example.
void cmd_simulate(const RunConfig& cfg);
/// Standardizes, samples and writes draws.jsonl plus diagnostics.json.
void cmd_fit(const RunConfig& cfg);
/// Per-draw projection clustering: partitions.jsonl, coincidence.csv,
/// coincidence_summary.json.
void cmd_cluster(const RunConfig& cfg);
/// kl_curve.csv and/or instability_curve.csv plus selected_k.json.
void cmd_select_k(const RunConfig& cfg);
/// Rand / adjusted Rand summary of partitions against known labels.
void cmd_evaluate(const RunConfig& cfg);
/// Power spectra of raw signals, written in the long CSV format.
void cmd_spectrum(const RunConfig& cfg);

/// 2 validation, 3 numerical, 4 I/O, 1 anything else.
int exit_code_for(const std::exception& e);

int run_cli(int argc, char** argv);

}  // namespace projclust
