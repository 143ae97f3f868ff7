#include "projclust/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "projclust/dataset.hpp"
#include "projclust/draw_io.hpp"
#include "projclust/errors.hpp"
#include "projclust/evaluation.hpp"
#include "projclust/linalg.hpp"
#include "projclust/parallel.hpp"
#include "projclust/projection.hpp"
#include "projclust/replicate.hpp"
#include "projclust/rng.hpp"
#include "projclust/selection.hpp"

namespace projclust {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string g_prior_name(GPriorKind kind) {
  return kind == GPriorKind::FullInverseWishart ? "inverse_wishart" : "diagonal";
}

GPriorKind g_prior_from_name(const std::string& name) {
  if (name == "inverse_wishart") return GPriorKind::FullInverseWishart;
  if (name == "diagonal") return GPriorKind::DiagonalInvGamma;
  throw ValidationError("unknown g_prior '" + name + "' (expected inverse_wishart or diagonal)");
}

ordered_json basis_to_json(const BasisSpec& b) {
  ordered_json j;
  j["kind"] = to_string(b.kind);
  j["order"] = b.order;
  j["degree"] = b.degree;
  j["intercept"] = b.intercept;
  return j;
}

template <class Json>
BasisSpec basis_from_json(const Json& j, BasisSpec b = {}) {
  if (j.contains("kind")) b.kind = basis_kind_from_string(j.at("kind").template get<std::string>());
  if (j.contains("order")) {
    b.order = j.at("order").template get<int>();
  } else if (b.kind == BasisKind::CubicBSpline) {
    b.order = 30;
  }
  if (j.contains("degree")) b.degree = j.at("degree").template get<int>();
  if (j.contains("intercept")) b.intercept = j.at("intercept").template get<bool>();
  return b;
}

ordered_json priors_to_json(const PriorSpec& p) {
  ordered_json j;
  j["beta_var"] = p.beta_var;
  j["sigma2_shape"] = p.sigma2_shape;
  j["sigma2_rate"] = p.sigma2_rate;
  j["g_prior"] = g_prior_name(p.g_prior);
  j["iw_df"] = p.iw_df ? ordered_json(*p.iw_df) : ordered_json(nullptr);
  j["g_shape"] = p.g_shape;
  j["g_rate"] = p.g_rate;
  return j;
}

template <class Json>
PriorSpec priors_from_json(const Json& j) {
  PriorSpec p;
  if (j.contains("beta_var")) p.beta_var = j.at("beta_var").template get<double>();
  if (j.contains("sigma2_shape")) p.sigma2_shape = j.at("sigma2_shape").template get<double>();
  if (j.contains("sigma2_rate")) p.sigma2_rate = j.at("sigma2_rate").template get<double>();
  if (j.contains("g_prior")) p.g_prior = g_prior_from_name(j.at("g_prior").template get<std::string>());
  if (j.contains("iw_df") && !j.at("iw_df").is_null()) p.iw_df = j.at("iw_df").template get<double>();
  if (j.contains("g_shape")) p.g_shape = j.at("g_shape").template get<double>();
  if (j.contains("g_rate")) p.g_rate = j.at("g_rate").template get<double>();
  return p;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void echo_config(const RunConfig& cfg, const std::string& command) {
  ordered_json j;
  j["command"] = command;
  j["config_hash"] = cfg.hash();
  j["config"] = cfg.to_json();
  write_text(cfg.out / ("config." + command + ".json"), j.dump(2) + "\n");
}

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("shared set: '" + std::string(s) + "' is not an integer in " + std::string(what));
  }
  return v;
}

/// Standardized dataset and designs, checked against the subjects of a draw file.
struct FittedProblem {
  LongitudinalDataset data;
  ModelSpec spec;
  std::vector<SubjectDesign> designs;
  DrawFile draws;
};

FittedProblem load_fitted(const RunConfig& cfg) {
  FittedProblem fp;
  fp.draws = read_draws(cfg.draws_path());
  if (fp.draws.draws.empty()) throw ValidationError("draw file '" + cfg.draws_path().string() + "' has no draws");
  fp.spec = fp.draws.meta.contains("model") ? model_from_json(fp.draws.meta.at("model")) : cfg.model_spec();
  fp.spec.shared = parse_shared(cfg.shared, fp.spec.num_random());
  fp.spec.validate();
  // The dataset named at fit time is the default.
  fs::path input = cfg.input;
  if (input.empty() && fp.draws.meta.contains("input")) input = fp.draws.meta.at("input").get<std::string>();
  if (input.empty()) throw ValidationError("no input dataset given and the draw file does not name one");
  fp.data = standardize(load_csv(input)).data;
  if (fp.data.num_subjects() != fp.draws.subjects.size()) {
    throw ValidationError("dataset and draw file have different numbers of subjects");
  }
  for (std::size_t i = 0; i < fp.data.num_subjects(); ++i) {
    if (fp.data.subjects[i].id != fp.draws.subjects[i]) {
      throw ValidationError("subject '" + fp.data.subjects[i].id + "' does not match draw file order");
    }
  }
  fp.designs = build_designs(fp.data, fp.spec);
  if (fp.designs.front().X.cols() != fp.draws.p || fp.spec.num_random() != fp.draws.q) {
    throw ValidationError("draw file dimensions do not match the model");
  }
  return fp;
}

std::vector<std::size_t> selected_draws(const RunConfig& cfg, std::size_t available) {
  if (!cfg.cluster_draws) {
    std::vector<std::size_t> all(available);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  return evenly_spaced(available, static_cast<std::size_t>(*cfg.cluster_draws));
}

int resolve_k(const RunConfig& cfg) {
  if (cfg.k) return *cfg.k;
  const fs::path path = cfg.out / "selected_k.json";
  std::ifstream in(path);
  if (!in) throw IoError("no K given and '" + path.string() + "' not found; run select-k first");
  const json sel = json::parse(in);
  const std::string method = cfg.selection ? cfg.selection->method : "bootstrap";
  const std::string key = method == "kl" ? "kl" : "bootstrap";
  if (!sel.contains(key)) throw ValidationError("selected_k.json has no '" + key + "' entry");
  return sel.at(key).at("k").get<int>();
}

struct LabelledPartitions {
  std::vector<std::string> subjects;
  std::vector<std::vector<int>> labels;
};

LabelledPartitions read_partitions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open partitions file '" + path.string() + "'");
  LabelledPartitions out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      if (line_no == 1) {
        out.subjects = rec.at("subjects").get<std::vector<std::string>>();
        continue;
      }
      out.labels.push_back(rec.at("labels").get<std::vector<int>>());
      if (out.labels.back().size() != out.subjects.size()) {
        throw ParseError(path.string(), line_no, "label count does not match subjects");
      }
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  if (out.labels.empty()) throw ValidationError("partitions file '" + path.string() + "' has no partitions");
  return out;
}

std::map<std::string, int> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file '" + path.string() + "'");
  std::map<std::string, int> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line_no == 1) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(path.string(), line_no, "expected subject,label");
    std::string value = line.substr(comma + 1);
    if (!value.empty() && value.back() == '\r') value.pop_back();
    int label = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), label);
    if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
      throw ParseError(path.string(), line_no, "label is not an integer");
    }
    out[line.substr(0, comma)] = label;
  }
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& ids) {
  std::ostringstream os;
  os << "subject";
  for (const auto& id : ids) os << ',' << id;
  os << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << ids[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << ',' << format_double(m(r, c));
    os << '\n';
  }
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- config

std::vector<int> parse_shared(std::string_view text, int q) {
  std::vector<int> out;
  std::string_view body = text;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) body = text.substr(colon + 1);
  if (body == "all") {
    out.resize(static_cast<std::size_t>(q));
    std::iota(out.begin(), out.end(), 0);
  } else if (const auto dots = body.find(".."); dots != std::string_view::npos) {
    const int first = parse_int(body.substr(0, dots), text);
    const int last = parse_int(body.substr(dots + 2), text);
    if (last < first) throw ValidationError("shared set: empty range '" + std::string(text) + "'");
    for (int c = first; c <= last; ++c) out.push_back(c);
  } else {
    std::size_t start = 0;
    for (;;) {
      const auto comma = body.find(',', start);
      out.push_back(parse_int(body.substr(start, comma - start), text));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    std::sort(out.begin(), out.end());
  }
  validate_shared_set(out, q);
  return out;
}

ordered_json model_to_json(const ModelSpec& spec) {
  ordered_json j;
  j["random"] = basis_to_json(spec.random);
  ordered_json fixed;
  fixed["basis"] = spec.fixed.basis ? basis_to_json(*spec.fixed.basis) : ordered_json(nullptr);
  fixed["covariates"] = spec.fixed.use_covariates;
  j["fixed"] = fixed;
  j["shared"] = spec.shared;
  j["priors"] = priors_to_json(spec.priors);
  return j;
}

ModelSpec model_from_json(const ordered_json& j) {
  ModelSpec spec;
  spec.random = basis_from_json(j.at("random"));
  const auto& fixed = j.at("fixed");
  if (fixed.contains("basis") && !fixed.at("basis").is_null()) spec.fixed.basis = basis_from_json(fixed.at("basis"));
  spec.fixed.use_covariates = fixed.value("covariates", false);
  if (j.contains("shared")) spec.shared = j.at("shared").get<std::vector<int>>();
  if (j.contains("priors")) spec.priors = priors_from_json(j.at("priors"));
  return spec;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("draws")) c.draws = j.at("draws").get<std::string>();
    if (j.contains("partitions")) c.partitions = j.at("partitions").get<std::string>();
    if (j.contains("labels")) c.labels = j.at("labels").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("basis")) c.basis = basis_from_json(j.at("basis"));
    if (j.contains("fixed")) {
      const auto& f = j.at("fixed");
      if (f.contains("basis") && !f.at("basis").is_null()) c.fixed.basis = basis_from_json(f.at("basis"));
      c.fixed.use_covariates = f.value("covariates", false);
    }
    if (j.contains("shared")) {
      const auto& s = j.at("shared");
      if (s.is_array()) {
        std::string text;
        for (const auto& v : s) text += (text.empty() ? "" : ",") + std::to_string(v.get<int>());
        c.shared = text;
      } else {
        c.shared = s.get<std::string>();
      }
    }
    if (j.contains("priors")) c.priors = priors_from_json(j.at("priors"));
    if (j.contains("mcmc")) {
      const auto& m = j.at("mcmc");
      c.mcmc.n_chains = m.value("chains", c.mcmc.n_chains);
      c.mcmc.n_iter = m.value("iter", c.mcmc.n_iter);
      c.mcmc.burn_in = m.value("burn_in", c.mcmc.burn_in);
      c.mcmc.thin = m.value("thin", c.mcmc.thin);
    }
    if (j.contains("cluster")) {
      const auto& cl = j.at("cluster");
      if (cl.contains("k") && !cl.at("k").is_null()) c.k = cl.at("k").get<int>();
      c.restarts = cl.value("restarts", c.restarts);
      c.max_iter = cl.value("max_iter", c.max_iter);
      if (cl.contains("draws") && !cl.at("draws").is_null()) c.cluster_draws = cl.at("draws").get<int>();
    }
    if (j.contains("selection") && !j.at("selection").is_null()) {
      const auto& s = j.at("selection");
      SelectionConfig sel;
      sel.method = s.value("method", sel.method);
      sel.epsilon = s.value("epsilon", sel.epsilon);
      sel.B = s.value("B", sel.B);
      sel.k_max = s.value("k_max", sel.k_max);
      sel.S = s.value("S", sel.S);
      c.selection = sel;
    }
    if (j.contains("simulate")) {
      const auto& s = j.at("simulate");
      c.synth.n_per_group = s.value("n_per_group", c.synth.n_per_group);
      c.synth.T = s.value("T", c.synth.T);
      c.synth.noise_var = s.value("noise_var", c.synth.noise_var);
    }
    if (j.contains("spectrum")) {
      const auto& s = j.at("spectrum");
      c.n_freq = s.value("n_freq", c.n_freq);
      c.spectrum_h = s.value("h", c.spectrum_h);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config '" + path.string() + "': " + e.what());
  }
  return RunConfig::from_json(j);
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["input"] = input.string();
  j["draws"] = draws.string();
  j["partitions"] = partitions.string();
  j["labels"] = labels.string();
  j["seed"] = seed;
  j["basis"] = basis_to_json(basis);
  ordered_json f;
  f["basis"] = fixed.basis ? basis_to_json(*fixed.basis) : ordered_json(nullptr);
  f["covariates"] = fixed.use_covariates;
  j["fixed"] = f;
  j["shared"] = shared;
  j["priors"] = priors_to_json(priors);
  j["mcmc"] = {{"chains", mcmc.n_chains}, {"iter", mcmc.n_iter}, {"burn_in", mcmc.burn_in}, {"thin", mcmc.thin}};
  ordered_json cl;
  cl["k"] = k ? ordered_json(*k) : ordered_json(nullptr);
  cl["restarts"] = restarts;
  cl["max_iter"] = max_iter;
  cl["draws"] = cluster_draws ? ordered_json(*cluster_draws) : ordered_json(nullptr);
  j["cluster"] = cl;
  if (selection) {
    j["selection"] = {{"method", selection->method}, {"epsilon", selection->epsilon}, {"B", selection->B},
                      {"k_max", selection->k_max}, {"S", selection->S}};
  } else {
    j["selection"] = nullptr;
  }
  j["simulate"] = {{"n_per_group", synth.n_per_group}, {"T", synth.T}, {"noise_var", synth.noise_var}};
  j["spectrum"] = {{"n_freq", n_freq}, {"h", spectrum_h}};
  return j;
}

std::string RunConfig::hash() const { return hex64(fnv1a(to_json().dump())); }

ModelSpec RunConfig::model_spec() const {
  ModelSpec spec;
  spec.random = basis;
  spec.fixed = fixed;
  spec.priors = priors;
  spec.shared = parse_shared(shared, spec.num_random());
  return spec;
}

fs::path RunConfig::draws_path() const { return draws.empty() ? out / "draws.jsonl" : draws; }
fs::path RunConfig::partitions_path() const {
  return partitions.empty() ? out / "partitions.jsonl" : partitions;
}

void RunConfig::validate() const {
  if (k && selection) throw ValidationError("config: give either cluster.k or a selection method, not both");
  if (k && *k < 1) throw ValidationError("config: K must be >= 1");
  if (threads < 1) throw ValidationError("config: threads must be >= 1");
  if (selection) {
    const auto& m = selection->method;
    if (m != "kl" && m != "bootstrap" && m != "both") {
      throw ValidationError("config: selection.method must be kl, bootstrap or both");
    }
    if (selection->B < 1 || selection->k_max < 2 || selection->S < 1) {
      throw ValidationError("config: selection needs B >= 1, k_max >= 2, S >= 1");
    }
  }
  if (restarts < 1 || max_iter < 1) throw ValidationError("config: restarts and max_iter must be >= 1");
  if (cluster_draws && *cluster_draws < 1) throw ValidationError("config: cluster.draws must be >= 1");
}

// ---------------------------------------------------------------- commands

void cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  SynthConfig sc = cfg.synth;
  sc.seed = cfg.seed;
  const auto synth = generate_example1(sc);
  ensure_dir(cfg.out);
  write_csv(synth.data, cfg.out / "data.csv");
  std::ostringstream labels;
  labels << "subject,label\n";
  for (std::size_t i = 0; i < synth.labels.size(); ++i) {
    labels << synth.data.subjects[i].id << ',' << synth.labels[i] << '\n';
  }
  write_text(cfg.out / "labels.csv", labels.str());
  echo_config(cfg, "simulate");
}

void cmd_fit(const RunConfig& cfg) {
  cfg.validate();
  const ModelSpec spec = cfg.model_spec();
  spec.validate();
  cfg.mcmc.validate();
  if (cfg.input.empty()) throw ValidationError("fit: no input dataset given");
  ensure_dir(cfg.out);
  const fs::path draws_path = cfg.draws_path();
  if (fs::exists(draws_path) && !cfg.force) {
    throw ValidationError("fit: '" + draws_path.string() + "' already exists; pass --force to overwrite");
  }

  const auto st = standardize(load_csv(cfg.input));
  McmcConfig mcmc = cfg.mcmc;
  mcmc.seed = cfg.seed;
  reset_jitter_event_count();
  const auto draws = gibbs_fit(st.data, spec, mcmc, cfg.threads);

  DrawFile file;
  for (const auto& s : st.data.subjects) file.subjects.push_back(s.id);
  file.p = static_cast<int>(draws.front().beta.size());
  file.q = spec.num_random();
  file.meta["config_hash"] = cfg.hash();
  file.meta["input"] = cfg.input.string();
  file.meta["model"] = model_to_json(spec);
  file.meta["transform"] = {{"time_offset", st.transform.time_offset},
                            {"time_scale", st.transform.time_scale},
                            {"y_mean", st.transform.y_mean},
                            {"y_sd", st.transform.y_sd}};
  file.meta["mcmc"] = {{"chains", mcmc.n_chains}, {"iter", mcmc.n_iter}, {"burn_in", mcmc.burn_in},
                       {"thin", mcmc.thin}, {"seed", mcmc.seed}};
  file.draws = draws;
  write_draws(file, draws_path);

  // Trace summaries and split-R-hat across chains.
  const auto per_chain = static_cast<std::size_t>(mcmc.draws_per_chain());
  ordered_json params = ordered_json::array();
  auto summarize = [&](const std::string& name, auto&& get) {
    std::vector<std::vector<double>> chains(static_cast<std::size_t>(mcmc.n_chains));
    double sum = 0.0, sq = 0.0;
    for (std::size_t d = 0; d < draws.size(); ++d) {
      const double v = get(draws[d]);
      chains[d / per_chain].push_back(v);
      sum += v;
      sq += v * v;
    }
    const double n = static_cast<double>(draws.size());
    const double mean = sum / n;
    const double sd = n > 1 ? std::sqrt(std::max(0.0, (sq - n * mean * mean) / (n - 1))) : 0.0;
    const double rhat = split_rhat(chains);
    ordered_json p;
    p["name"] = name;
    p["mean"] = mean;
    p["sd"] = sd;
    p["split_rhat"] = std::isfinite(rhat) ? ordered_json(rhat) : ordered_json(nullptr);
    params.push_back(p);
    std::clog << "  " << name << ": mean " << mean << ", sd " << sd << ", split-Rhat " << rhat << '\n';
  };
  std::clog << "fit: " << draws.size() << " draws, " << st.data.num_subjects() << " subjects\n";
  for (int k = 0; k < file.p; ++k) {
    summarize("beta[" + std::to_string(k) + "]", [k](const PosteriorDraw& d) { return d.beta(k); });
  }
  summarize("sigma2", [](const PosteriorDraw& d) { return d.sigma2; });
  for (int k = 0; k < file.q; ++k) {
    summarize("G[" + std::to_string(k) + "," + std::to_string(k) + "]",
              [k](const PosteriorDraw& d) { return d.G(k, k); });
  }
  ordered_json diag;
  diag["draws"] = draws.size();
  diag["jitter_events"] = jitter_event_count();
  diag["parameters"] = params;
  write_text(cfg.out / "diagnostics.json", diag.dump(2) + "\n");
  echo_config(cfg, "fit");
}

void cmd_cluster(const RunConfig& cfg) {
  cfg.validate();
  const auto fp = load_fitted(cfg);
  const int K = resolve_k(cfg);
  const auto n = fp.data.num_subjects();
  if (K < 1 || static_cast<std::size_t>(K) > n) {
    throw ValidationError("cluster: K = " + std::to_string(K) + " must lie in [1, " + std::to_string(n) + "]");
  }
  const auto idx = selected_draws(cfg, fp.draws.draws.size());
  std::vector<Partition> partitions(idx.size());
  parallel_for(idx.size(), cfg.threads, [&](std::size_t s) {
    const auto inputs = projection_inputs(fp.designs, fp.draws.draws[idx[s]], fp.spec.shared);
    ProjectionOptions po;
    po.n_restarts = cfg.restarts;
    po.max_iter = cfg.max_iter;
    po.seed = mix64(cfg.seed ^ mix64(idx[s]));
    partitions[s] = project_cluster(inputs, K, po);
  });

  ensure_dir(cfg.out);
  std::ostringstream os;
  ordered_json header;
  header["format"] = "projclust-partitions";
  header["subjects"] = fp.draws.subjects;
  header["shared"] = fp.spec.shared;
  header["K"] = K;
  os << header.dump() << '\n';
  std::vector<std::vector<int>> labelings;
  labelings.reserve(partitions.size());
  for (std::size_t s = 0; s < partitions.size(); ++s) {
    std::vector<int> one_based = partitions[s].labels;
    for (int& z : one_based) ++z;
    ordered_json rec;
    rec["draw_index"] = idx[s];
    rec["K"] = K;
    rec["labels"] = one_based;
    rec["objective"] = partitions[s].objective;
    rec["converged"] = partitions[s].converged;
    os << rec.dump() << '\n';
    labelings.push_back(partitions[s].labels);
  }
  write_text(cfg.partitions_path(), os.str());

  const Eigen::MatrixXd cm = coincidence(labelings);
  write_text(cfg.out / "coincidence.csv", matrix_csv(cm, fp.draws.subjects));
  const auto ts = threshold_summary(cm);
  ordered_json summary;
  summary["draws"] = partitions.size();
  summary["K"] = K;
  summary["pairs"] = ts.pairs;
  summary["weak_pairs"] = ts.weak;
  summary["weak_band"] = {ts.lower, ts.upper};
  summary["solid_pairs"] = ts.solid;
  summary["solid_threshold"] = ts.upper;
  write_text(cfg.out / "coincidence_summary.json", summary.dump(2) + "\n");
  echo_config(cfg, "cluster");
}

void cmd_select_k(const RunConfig& cfg) {
  cfg.validate();
  const SelectionConfig sel = cfg.selection.value_or(SelectionConfig{});
  const auto fp = load_fitted(cfg);
  const auto n = static_cast<int>(fp.data.num_subjects());
  const int k_max = std::min(sel.k_max, n);
  const auto n_draws = fp.draws.draws.size();
  ensure_dir(cfg.out);
  ordered_json result;

  if (sel.method == "kl" || sel.method == "both") {
    KlCurveOptions ko;
    ko.n_restarts = cfg.restarts;
    ko.max_iter = cfg.max_iter;
    ko.seed = cfg.seed;
    ko.threads = cfg.threads;
    const auto S = std::min<std::size_t>(static_cast<std::size_t>(sel.S), n_draws);
    const auto curve = kl_curve(fp.designs, fp.draws.draws, fp.spec, k_max, S, ko);
    std::ostringstream os;
    os << "K,KL_K\n";
    for (std::size_t j = 0; j < curve.k.size(); ++j) os << curve.k[j] << ',' << format_double(curve.kl[j]) << '\n';
    write_text(cfg.out / "kl_curve.csv", os.str());
    result["kl"] = {{"epsilon", sel.epsilon}, {"k", choose_k_kl(curve, sel.epsilon)}, {"draws", S}};
  }
  if (sel.method == "bootstrap" || sel.method == "both") {
    const auto S = std::min<std::size_t>({static_cast<std::size_t>(sel.S), std::size_t{200}, n_draws});
    const auto times = union_times(fp.data);
    const auto fitted = fitted_mean_matrix(fp.data, fp.spec, fp.draws.draws, evenly_spaced(n_draws, S), times);
    InstabilityOptions io;
    io.B = sel.B;
    io.n_restarts = cfg.restarts;
    io.max_iter = cfg.max_iter;
    io.seed = cfg.seed;
    io.threads = cfg.threads;
    const auto curve = instability_curve(fitted, k_max, io);
    std::ostringstream os;
    os << "K,I_K\n";
    for (std::size_t j = 0; j < curve.k.size(); ++j) {
      os << curve.k[j] << ',' << format_double(curve.instability[j]) << '\n';
    }
    write_text(cfg.out / "instability_curve.csv", os.str());
    const auto choice = choose_k_bootstrap(curve, k_max);
    result["bootstrap"] = {{"B", sel.B}, {"k_max", k_max}, {"k", choice.k}, {"degenerate", choice.degenerate},
                           {"draws", S}};
  }
  write_text(cfg.out / "selected_k.json", result.dump(2) + "\n");
  echo_config(cfg, "select-k");
}

void cmd_evaluate(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.labels.empty()) throw ValidationError("evaluate: no labels file given");
  const auto parts = read_partitions(cfg.partitions_path());
  const auto truth_by_id = read_labels(cfg.labels);
  if (truth_by_id.size() != parts.subjects.size()) {
    throw ValidationError("evaluate: labels file has " + std::to_string(truth_by_id.size()) +
                          " subjects, partitions have " + std::to_string(parts.subjects.size()));
  }
  std::vector<int> truth;
  for (const auto& id : parts.subjects) {
    const auto it = truth_by_id.find(id);
    if (it == truth_by_id.end()) throw ValidationError("evaluate: no label for subject '" + id + "'");
    truth.push_back(it->second);
  }
  const auto s = summarize_indices(parts.labels, truth);
  ordered_json j;
  j["partitions"] = parts.labels.size();
  j["rand_mean"] = s.rand_mean;
  j["rand_sd"] = s.rand_sd;
  j["ari_mean"] = s.ari_mean;
  j["ari_sd"] = s.ari_sd;
  ensure_dir(cfg.out);
  write_text(cfg.out / "evaluation.json", j.dump(2) + "\n");
  echo_config(cfg, "evaluate");
}

void cmd_spectrum(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.input.empty()) throw ValidationError("spectrum: no input signals given");
  const auto raw = load_csv(cfg.input);
  LongitudinalDataset out;
  for (const auto& s : raw.subjects) {
    const auto ps = power_spectrum(s.y, cfg.n_freq, cfg.spectrum_h);
    SubjectRecord rec;
    rec.id = s.id;
    for (int k = 0; k < cfg.n_freq; ++k) {
      rec.times.push_back(static_cast<double>(k) / cfg.n_freq);
      rec.y.push_back(ps[static_cast<std::size_t>(k)]);
    }
    rec.covariates.resize(cfg.n_freq, 0);
    out.subjects.push_back(std::move(rec));
  }
  ensure_dir(cfg.out);
  write_csv(out, cfg.out / "spectrum.csv");
  echo_config(cfg, "spectrum");
}

// ---------------------------------------------------------------- entry point

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const IoError*>(&e) != nullptr) return 4;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return 4;
  if (dynamic_cast<const json::exception*>(&e) != nullptr) return 2;
  return 1;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Bayesian projection clustering for longitudinal data"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out, input, shared, draws, partitions, labels;
  std::optional<std::uint64_t> seed;
  std::optional<int> k, threads;
  bool force = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out, "Output directory");
  app.add_option("--input", input, "Input CSV (subject,time,y[,x...])");
  app.add_option("--k", k, "Number of clusters");
  app.add_option("--shared", shared, "Shared random-effect columns: all | low:0..3 | 0,1,2");
  app.add_option("--threads", threads, "Worker threads");
  app.add_option("--draws", draws, "Draw file (default <out>/draws.jsonl)");
  app.add_option("--partitions", partitions, "Partitions file (default <out>/partitions.jsonl)");
  app.add_option("--labels", labels, "Known labels CSV (subject,label)");
  app.add_flag("--force", force, "Overwrite existing draw files");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Generate the four-group synthetic dataset"},
      {"fit", "Fit the linear mixed model by Gibbs sampling"},
      {"cluster", "Projection clustering of every posterior draw"},
      {"select-k", "KL-ratio and bootstrap-instability choice of K"},
      {"evaluate", "Rand and adjusted Rand indices against known labels"},
      {"spectrum", "Power spectra of raw signals"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    if (!input.empty()) cfg.input = input;
    if (!shared.empty()) cfg.shared = shared;
    if (threads) cfg.threads = *threads;
    if (!draws.empty()) cfg.draws = draws;
    if (!partitions.empty()) cfg.partitions = partitions;
    if (!labels.empty()) cfg.labels = labels;
    if (k) {
      cfg.k = *k;
      cfg.selection.reset();
    }
    cfg.force = force;

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "simulate") cmd_simulate(cfg);
    else if (name == "fit") cmd_fit(cfg);
    else if (name == "cluster") cmd_cluster(cfg);
    else if (name == "select-k") cmd_select_k(cfg);
    else if (name == "evaluate") cmd_evaluate(cfg);
    else if (name == "spectrum") cmd_spectrum(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace projclust
