#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tgadv/pipeline/report.hpp"
#include "tgadv/pipeline/run.hpp"

namespace fs = std::filesystem;
using namespace tgadv;
using pipeline::run_stage;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;

  [[nodiscard]] auto load() const -> pipeline::ExperimentConfig {
    return run_stage("config", [&] {
      const auto base = config.empty() ? pipeline::ExperimentConfig{} : pipeline::load_config(config);
      return pipeline::apply_overrides(base, overrides);
    });
  }
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
  cmd->add_option("--config", c.config, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
  if (with_seed) cmd->add_option("--seed", c.seed, "run seed");
}

/// A clean interaction file or a perturbation manifest, with its splits.
struct LoadedGraph {
  DynamicGraph graph;
  SplitBundle splits;
};

auto load_input(const std::string& graph, const std::string& manifest) -> LoadedGraph {
  return run_stage("ingest", [&] {
    if (!manifest.empty()) {
      auto m = load_perturbation_manifest(manifest);
      auto s = attack::corrupted_splits(m.graph);
      return LoadedGraph{std::move(m.graph), s};
    }
    auto g = load_interactions(graph);
    auto s = chronological_split(g);
    return LoadedGraph{std::move(g), s};
  });
}

void add_graph_inputs(CLI::App* cmd, std::string& graph, std::string& manifest) {
  auto* g = cmd->add_option("--graph", graph, "interaction CSV")->check(CLI::ExistingFile);
  auto* m = cmd->add_option("--manifest", manifest, "perturbation manifest CSV")->check(CLI::ExistingFile);
  g->excludes(m);
  m->excludes(g);
  cmd->require_option(1, 0);
}

void print_metrics(const eval::ProtocolReport& r) {
  std::cout << "validation MRR " << r.validation.mrr << "  Hit@10 " << r.validation.hit10 << "  (n="
            << r.validation.num_evaluated << ")\n";
  std::cout << "test       MRR " << r.test.mrr << "  Hit@10 " << r.test.hit10 << "  (n=" << r.test.num_evaluated
            << ")";
  if (r.test.auroc) std::cout << "  AUROC " << *r.test.auroc;
  std::cout << '\n';
}

}  // namespace

auto main(int argc, char** argv) -> int {
  CLI::App app{"Poisoning attacks and defenses for temporal graph link prediction"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log progress");

  // synth
  Common synth_c;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark graph");
  add_common(synth, synth_c, false);
  synth->add_option("--out", synth_out, "output CSV")->required();

  // ingest
  Common ingest_c;
  std::string ingest_in;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "load an interaction CSV (data.* column keys) and normalize it");
  add_common(ingest, ingest_c, false);
  ingest->add_option("--input", ingest_in, "raw interaction CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "normalized CSV")->required();

  // attack
  Common attack_c;
  std::string attack_graph;
  std::string attack_out;
  std::string attack_report;
  std::string attack_surrogate;
  auto* atk = app.add_subcommand("attack", "inject adversarial edges (attack.* keys)");
  add_common(atk, attack_c);
  atk->add_option("--graph", attack_graph, "clean interaction CSV")->required()->check(CLI::ExistingFile);
  atk->add_option("--out", attack_out, "perturbation manifest CSV")->required();
  atk->add_option("--report", attack_report, "compliance report JSON");
  atk->add_option("--surrogate", attack_surrogate, "surrogate checkpoint for tspear (trained when absent)")
      ->check(CLI::ExistingFile);

  // train / defend
  Common train_c;
  std::string train_graph;
  std::string train_manifest;
  std::string train_out;
  auto* train = app.add_subcommand("train", "train a plain TGN (model.* and train.* keys)");
  add_common(train, train_c);
  add_graph_inputs(train, train_graph, train_manifest);
  train->add_option("--out", train_out, "checkpoint path")->required();

  Common defend_c;
  std::string defend_graph;
  std::string defend_manifest;
  std::string defend_out;
  std::string defend_ledger;
  auto* defend = app.add_subcommand("defend", "train with a defense (defense.* keys)");
  add_common(defend, defend_c);
  add_graph_inputs(defend, defend_graph, defend_manifest);
  defend->add_option("--out", defend_out, "checkpoint path")->required();
  defend->add_option("--ledger", defend_ledger, "filter ledger CSV");

  // eval
  Common eval_c;
  std::string eval_graph;
  std::string eval_manifest;
  std::string eval_ckpt;
  std::string eval_out;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint (eval.* and defense.variant keys)");
  add_common(ev, eval_c);
  add_graph_inputs(ev, eval_graph, eval_manifest);
  ev->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", eval_out, "report JSON");

  // run
  Common run_c;
  auto* run = app.add_subcommand("run", "full pipeline over eval.seeds into output.dir");
  add_common(run, run_c, false);

  // report
  std::vector<std::string> report_dirs;
  std::string report_csv;
  auto* rep = app.add_subcommand("report", "aggregate run directories into a comparison table");
  rep->add_option("runs", report_dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--csv", report_csv, "also write the table as CSV");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*synth) {
      const auto cfg = synth_c.load();
      const auto g = run_stage("ingest", [&] {
        cfg.synthetic.check();
        return generate_synthetic(cfg.synthetic);
      });
      run_stage("output", [&] { write_interactions(synth_out, g); });
      std::cout << "wrote " << g.size() << " interactions to " << synth_out << '\n';
    } else if (*ingest) {
      auto cfg = ingest_c.load();
      cfg.data_path = ingest_in;
      const auto g = run_stage("ingest", [&] { return pipeline::load_graph(cfg); });
      run_stage("output", [&] { write_interactions(ingest_out, g); });
      std::cout << "wrote " << g.size() << " interactions over " << g.num_nodes() << " nodes to " << ingest_out
                << '\n';
    } else if (*atk) {
      auto cfg = attack_c.load();
      if (!cfg.attack.enabled()) throw pipeline::PipelineError("config", "attack.kind is none");
      run_stage("config", [&] { cfg.attack.config.check(); });
      const auto in = load_input(attack_graph, "");
      const auto result = run_stage("attack", [&] {
        if (cfg.attack.is_tspear() && !attack_surrogate.empty()) {
          const auto ck = tgnn::load_checkpoint(attack_surrogate);
          return attack::run_tspear(in.graph, in.splits, pipeline::seeded_attack(cfg, attack_c.seed), ck.model);
        }
        return pipeline::run_attack(cfg, in.graph, in.splits, attack_c.seed);
      });
      const auto compliance = attack::validate_constraints(result.corrupted, result.pset);
      run_stage("output", [&] {
        write_perturbation_manifest(attack_out, result.corrupted, result.batch_ids);
        if (!attack_report.empty()) pipeline::write_json(attack_report, pipeline::compliance_to_json(compliance));
      });
      std::cout << "injected " << result.pset.edges.size() << " edges (budget " << compliance.budget
                << "); constraints " << (compliance.all() ? "satisfied" : "violated") << '\n';
      for (const auto& v : compliance.violations) std::cout << "  " << v << '\n';
    } else if (*train || *defend) {
      auto& c = *train ? train_c : defend_c;
      auto cfg = c.load();
      if (*train) cfg.defense.variant = defense::Variant::none;
      const auto in = *train ? load_input(train_graph, train_manifest) : load_input(defend_graph, defend_manifest);
      run_stage("config", [&] { cfg.check(); });
      const auto hyper = pipeline::seeded_hyper(cfg, in.graph, c.seed);
      const auto tcfg = pipeline::seeded_train(cfg, c.seed);
      const auto stage = *train ? "train" : "defend";
      const auto d = run_stage(stage, [&] { return defense::train_defended(in.graph, in.splits, hyper, tcfg, cfg.defense); });
      std::map<std::string, double> scalars;
      if (defense::filters(cfg.defense.variant)) {
        scalars["deployment_threshold"] =
            cfg.defense.variant == defense::Variant::tgn_cosine ? cfg.defense.tau_cosine : d.ledger.final_threshold;
      }
      run_stage("output", [&] {
        tgnn::save_checkpoint(*train ? train_out : defend_out, d.train.model,
                              {{"seed", c.seed}, {"negative_seed", tcfg.negative_seed}}, scalars);
        if (*defend && !defend_ledger.empty() && !d.ledger.empty()) d.ledger.write_csv(defend_ledger);
      });
      std::cout << "trained " << d.train.epochs_run << " epochs; best epoch " << d.train.best_epoch
                << " (validation MRR " << d.train.best_mrr << ")\n";
    } else if (*ev) {
      const auto cfg = eval_c.load();
      const auto in = load_input(eval_graph, eval_manifest);
      const auto ck = run_stage("ingest", [&] { return tgnn::load_checkpoint(eval_ckpt); });
      eval::EdgeFilter filter;
      if (defense::filters(cfg.defense.variant)) {
        auto it = ck.scalars.find("deployment_threshold");
        if (it == ck.scalars.end()) {
          throw pipeline::PipelineError("evaluate", "checkpoint carries no deployment threshold for a filtering defense");
        }
        filter = defense::make_deployment_filter(cfg.defense, it->second);
      }
      const auto r = run_stage("evaluate", [&] {
        return eval::evaluate_protocol(ck.model, in.graph, in.splits,
                                       pipeline::protocol_options(cfg, eval_c.seed, filter));
      });
      print_metrics(r);
      if (!eval_out.empty()) {
        run_stage("output", [&] {
          pipeline::write_json(eval_out, {{"validation", pipeline::metrics_to_json(r.validation)},
                                          {"test", pipeline::metrics_to_json(r.test)}});
        });
      }
    } else if (*run) {
      const auto cfg = run_c.load();
      const auto result = pipeline::run_pipeline(cfg);
      for (const auto& s : result.seeds) {
        std::cout << "seed " << s.seed << ": ";
        print_metrics(s.metrics);
      }
      std::cout << "artifacts in " << result.dir.string() << " (" << result.artifacts.size() << " files hashed)\n";
    } else if (*rep) {
      std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
      const auto table = run_stage("report", [&] { return pipeline::report_table(dirs); });
      std::cout << table.to_text();
      if (!report_csv.empty()) {
        std::ofstream out(report_csv, std::ios::binary);
        if (!out) throw pipeline::PipelineError("report", "cannot write " + report_csv);
        out << table.to_csv();
      }
    }
  } catch (const pipeline::PipelineError& e) {
    std::cerr << "error in stage " << e.stage() << ": " << e.cause() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
