#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgadv/attack/tspear.hpp"
#include "tgadv/defense/baselines.hpp"
#include "tgadv/eval/protocol.hpp"
#include "tgadv/pipeline/config.hpp"
#include "tgadv/tgnn/checkpoint.hpp"
#include "tgadv/util/hash.hpp"
#include "tgadv/util/stats.hpp"

namespace tgadv::pipeline {

using Json = nlohmann::ordered_json;

/// A stage failure: which stage, and why.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)), cause_(cause) {}
  [[nodiscard]] auto stage() const -> const std::string& { return stage_; }
  [[nodiscard]] auto cause() const -> const std::string& { return cause_; }

 private:
  std::string stage_;
  std::string cause_;
};

template <class F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

// ---------------------------------------------------------------- JSON I/O

inline auto metrics_to_json(const eval::MetricsReport& m) -> Json {
  Json j = {{"split", m.split == eval::Split::validation ? "validation" : "test"},
            {"mrr", m.mrr},
            {"hit10", m.hit10},
            {"num_evaluated", m.num_evaluated},
            {"candidate_pool", m.candidate_pool},
            {"seed", m.seed}};
  j["auroc"] = m.auroc ? Json(*m.auroc) : Json(nullptr);
  return j;
}

inline auto metrics_from_json(const Json& j) -> eval::MetricsReport {
  eval::MetricsReport m;
  m.split = j.at("split").get<std::string>() == "validation" ? eval::Split::validation : eval::Split::test;
  m.mrr = j.at("mrr").get<double>();
  m.hit10 = j.at("hit10").get<double>();
  m.num_evaluated = j.at("num_evaluated").get<std::size_t>();
  m.candidate_pool = j.at("candidate_pool").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("auroc").is_null()) m.auroc = j.at("auroc").get<double>();
  return m;
}

inline auto compliance_to_json(const attack::ComplianceReport& r) -> Json {
  return {{"c1", r.c1},
          {"c2", r.c2},
          {"c3", r.c3},
          {"c4", r.c4},
          {"consistent", r.consistent},
          {"budget", r.budget},
          {"injected", r.injected},
          {"ks_statistic", r.ks_statistic},
          {"ks_critical", r.ks_critical},
          {"alpha", r.alpha},
          {"self_loops", r.self_loops},
          {"violations", r.violations}};
}

inline auto compliance_from_json(const Json& j) -> attack::ComplianceReport {
  attack::ComplianceReport r;
  r.c1 = j.at("c1").get<bool>();
  r.c2 = j.at("c2").get<bool>();
  r.c3 = j.at("c3").get<bool>();
  r.c4 = j.at("c4").get<bool>();
  r.consistent = j.at("consistent").get<bool>();
  r.budget = j.at("budget").get<std::size_t>();
  r.injected = j.at("injected").get<std::size_t>();
  r.ks_statistic = j.at("ks_statistic").get<double>();
  r.ks_critical = j.at("ks_critical").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.self_loops = j.at("self_loops").get<std::size_t>();
  r.violations = j.at("violations").get<std::vector<std::string>>();
  return r;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline auto read_json(const std::filesystem::path& path) -> Json {
  std::ifstream in(path);
  if (!in) throw InputError("missing file: " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- run

/// What one seed produced.
struct SeedReport {
  std::uint64_t seed = 0;
  eval::ProtocolReport metrics;
  std::optional<attack::ComplianceReport> compliance;
  std::optional<double> deployment_threshold;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;

  [[nodiscard]] auto to_json() const -> Json {
    Json j = {{"seed", seed},
              {"validation", metrics_to_json(metrics.validation)},
              {"test", metrics_to_json(metrics.test)},
              {"best_epoch", best_epoch},
              {"epochs_run", epochs_run}};
    j["compliance"] = compliance ? compliance_to_json(*compliance) : Json(nullptr);
    j["deployment_threshold"] = deployment_threshold ? Json(*deployment_threshold) : Json(nullptr);
    return j;
  }

  static auto from_json(const Json& j) -> SeedReport {
    SeedReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.metrics.validation = metrics_from_json(j.at("validation"));
    r.metrics.test = metrics_from_json(j.at("test"));
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    r.epochs_run = j.at("epochs_run").get<std::size_t>();
    if (!j.at("compliance").is_null()) r.compliance = compliance_from_json(j.at("compliance"));
    if (!j.at("deployment_threshold").is_null()) r.deployment_threshold = j.at("deployment_threshold").get<double>();
    return r;
  }
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<SeedReport> seeds;
  std::map<std::string, std::string> artifacts;  // relative path -> sha256
};

inline auto seed_dir_name(std::uint64_t seed) -> std::string { return "seed_" + std::to_string(seed); }

/// Loads the configured dataset or generates the synthetic graph.
inline auto load_graph(const ExperimentConfig& cfg) -> DynamicGraph {
  if (!cfg.data_path) return generate_synthetic(cfg.synthetic);
  if (cfg.columns_given) return load_interactions(*cfg.data_path, cfg.columns);
  return load_interactions(*cfg.data_path);
}

/// Per-seed model hyperparameters: the seed drives initialization.
inline auto seeded_hyper(const ExperimentConfig& cfg, const DynamicGraph& g, std::uint64_t seed) -> tgnn::TgnnHyper {
  auto h = cfg.model;
  h.edge_dim = g.edge_dim();
  h.init_seed = seed;
  return h;
}

inline auto seeded_train(const ExperimentConfig& cfg, std::uint64_t seed) -> tgnn::TrainConfig {
  auto t = cfg.train;
  t.negative_seed = seed;
  t.eval_negatives = cfg.eval.negatives;
  return t;
}

inline auto seeded_attack(const ExperimentConfig& cfg, std::uint64_t seed) -> attack::AttackConfig {
  auto a = cfg.attack.config;
  a.seed = derive_seed({cfg.attack.config.seed, seed});
  return a;
}

/// Runs the configured attack. T-Spear first trains a surrogate on the clean graph.
inline auto run_attack(const ExperimentConfig& cfg, const DynamicGraph& g, const SplitBundle& splits,
                       std::uint64_t seed, std::optional<tgnn::TgnnModel>* surrogate_out = nullptr)
    -> attack::AttackResult {
  const auto acfg = seeded_attack(cfg, seed);
  if (cfg.attack.is_tspear()) {
    auto surrogate = attack::train_surrogate(g, splits, seeded_hyper(cfg, g, seed), seeded_train(cfg, seed));
    auto r = attack::run_tspear(g, splits, acfg, surrogate.model);
    if (surrogate_out) *surrogate_out = std::move(surrogate.model);
    return r;
  }
  return attack::baseline_attack(g, splits, acfg, attack::parse_baseline(cfg.attack.kind));
}

inline auto protocol_options(const ExperimentConfig& cfg, std::uint64_t seed, eval::EdgeFilter filter)
    -> eval::ProtocolOptions {
  return {.seed = seed, .num_negatives = cfg.eval.negatives, .hit_k = cfg.eval.hit_k, .filter = std::move(filter)};
}

/// AUROC of the defense's final-epoch scores, when both classes occur.
inline auto filter_auroc(const defense::FilterLedger& ledger, const DynamicGraph& g) -> std::optional<double> {
  if (ledger.empty()) return std::nullopt;
  std::vector<std::pair<double, bool>> scored;
  bool pos = false;
  bool neg = false;
  for (const auto& s : defense::classify_adversarial(ledger, g)) {
    scored.emplace_back(s.score, s.adversarial);
    (s.adversarial ? pos : neg) = true;
  }
  if (!pos || !neg) return std::nullopt;
  return eval::auroc(scored);
}

inline auto hash_tree(const std::filesystem::path& dir) -> std::map<std::string, std::string> {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir).generic_string();
    if (rel == "provenance.json") continue;
    out[rel] = sha256_file(entry.path());
  }
  return out;
}

/// Refuses to touch an existing run unless overwrite is set; an overwrite
/// clears the previous run first so no stale artifact survives.
inline void prepare_output(const ExperimentConfig& cfg) {
  const auto& dir = cfg.output_dir;
  if (std::filesystem::exists(dir)) {
    if (!std::filesystem::is_directory(dir)) throw InputError(dir.string() + " exists and is not a directory");
    const bool previous_run = std::filesystem::exists(dir / "provenance.json");
    const bool empty = std::filesystem::is_empty(dir);
    if (!empty && !previous_run) throw InputError(dir.string() + " is not empty and holds no previous run");
    if (previous_run && !cfg.overwrite) {
      throw InputError(dir.string() + " already holds a run; set output.overwrite=true to replace it");
    }
    if (previous_run) std::filesystem::remove_all(dir);
  }
  std::filesystem::create_directories(dir);
}

/// Aggregate over seeds: mean and sample standard deviation.
struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};

inline auto summarize(const std::vector<double>& xs) -> Summary {
  return {stats::mean(xs), stats::sample_std(xs), xs.size()};
}

inline auto summary_json(const std::vector<double>& xs) -> Json {
  const auto s = summarize(xs);
  return {{"mean", s.mean}, {"std", s.stddev}, {"n", s.n}};
}

/// ingest/generate -> split -> attack -> train or defend -> evaluate, per seed.
/// Layout: config.kv, graph.csv, seed_<s>/{manifest.csv, compliance.json,
/// surrogate.ckpt, model.ckpt, ledger.csv, report.json}, report.json,
/// provenance.json (sha256 of every other file).
inline auto run_pipeline(const ExperimentConfig& cfg) -> RunResult {
  run_stage("config", [&] { cfg.check(); });
  run_stage("output", [&] { prepare_output(cfg); });
  const auto& dir = cfg.output_dir;
  run_stage("output", [&] { save_config(dir / "config.kv", cfg); });
  const auto g = run_stage("ingest", [&] { return load_graph(cfg); });
  run_stage("ingest", [&] { write_interactions(dir / "graph.csv", g); });
  const auto splits = run_stage("split", [&] { return chronological_split(g); });

  RunResult result;
  result.dir = dir;
  for (const auto seed : cfg.eval.seeds) {
    const auto sdir = dir / seed_dir_name(seed);
    std::filesystem::create_directories(sdir);
    SeedReport rep;
    rep.seed = seed;

    const DynamicGraph* graph = &g;
    const SplitBundle* sp = &splits;
    std::optional<attack::AttackResult> atk;
    if (cfg.attack.enabled()) {
      std::optional<tgnn::TgnnModel> surrogate;
      atk = run_stage("attack", [&] { return run_attack(cfg, g, splits, seed, &surrogate); });
      run_stage("attack", [&] {
        write_perturbation_manifest(sdir / "manifest.csv", atk->corrupted, atk->batch_ids);
        rep.compliance = attack::validate_constraints(atk->corrupted, atk->pset);
        write_json(sdir / "compliance.json", compliance_to_json(*rep.compliance));
        if (surrogate) save_checkpoint(sdir / "surrogate.ckpt", *surrogate, {{"seed", seed}});
      });
      graph = &atk->corrupted;
      sp = &atk->splits;
    }

    const auto hyper = seeded_hyper(cfg, *graph, seed);
    const auto tcfg = seeded_train(cfg, seed);
    const bool defended = cfg.defense.variant != defense::Variant::none;
    auto trained = run_stage(defended ? "defend" : "train",
                             [&] { return defense::train_defended(*graph, *sp, hyper, tcfg, cfg.defense); });
    rep.best_epoch = trained.train.best_epoch;
    rep.epochs_run = trained.train.epochs_run;
    std::map<std::string, double> scalars;
    if (defense::filters(cfg.defense.variant)) {
      rep.deployment_threshold = cfg.defense.variant == defense::Variant::tgn_cosine ? cfg.defense.tau_cosine
                                                                                      : trained.ledger.final_threshold;
      scalars["deployment_threshold"] = *rep.deployment_threshold;
      run_stage("defend", [&] { trained.ledger.write_csv(sdir / "ledger.csv"); });
    }
    run_stage(defended ? "defend" : "train", [&] {
      save_checkpoint(sdir / "model.ckpt", trained.train.model, {{"seed", seed}, {"negative_seed", tcfg.negative_seed}},
                      scalars);
    });

    rep.metrics = run_stage("evaluate", [&] {
      auto r = eval::evaluate_protocol(trained.train.model, *graph, *sp,
                                       protocol_options(cfg, seed, trained.deployment_filter));
      if (atk) r.test.auroc = filter_auroc(trained.ledger, *graph);
      return r;
    });
    run_stage("report", [&] { write_json(sdir / "report.json", rep.to_json()); });
    result.seeds.push_back(std::move(rep));
  }

  run_stage("report", [&] {
    std::vector<double> mrr, hit, vmrr, au;
    auto seeds = Json::array();
    for (const auto& s : result.seeds) {
      mrr.push_back(s.metrics.test.mrr);
      hit.push_back(s.metrics.test.hit10);
      vmrr.push_back(s.metrics.validation.mrr);
      if (s.metrics.test.auroc) au.push_back(*s.metrics.test.auroc);
      seeds.push_back(s.to_json());
    }
    Json config = Json::object();
    for (const auto& [k, v] : cfg.to_key_values()) config[k] = v;
    Json summary = {{"test_mrr", summary_json(mrr)}, {"test_hit10", summary_json(hit)},
                    {"validation_mrr", summary_json(vmrr)}};
    summary["auroc"] = au.empty() ? Json(nullptr) : summary_json(au);
    write_json(dir / "report.json", {{"config", config}, {"graph_sha256", sha256_file(dir / "graph.csv")},
                                     {"summary", summary}, {"seeds", seeds}});
    result.artifacts = hash_tree(dir);
    Json prov = Json::object();
    for (const auto& [k, v] : result.artifacts) prov[k] = v;
    write_json(dir / "provenance.json", {{"sha256", prov}});
  });
  return result;
}

/// Checks every artifact against provenance.json; returns the mismatches.
inline auto verify_provenance(const std::filesystem::path& dir) -> std::vector<std::string> {
  const auto prov = read_json(dir / "provenance.json").at("sha256");
  std::vector<std::string> bad;
  for (const auto& [rel, sha] : prov.items()) {
    const auto p = dir / rel;
    if (!std::filesystem::exists(p) || sha256_file(p) != sha.get<std::string>()) bad.push_back(rel);
  }
  return bad;
}

}  // namespace tgadv::pipeline
