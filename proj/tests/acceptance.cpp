// Acceptance gate: one PASS/FAIL line per criterion.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fd_check.hpp"
#include "tgadv/attack/assignment.hpp"
#include "tgadv/attack/selection.hpp"
#include "tgadv/attack/tspear.hpp"
#include "tgadv/ctdg/synthetic.hpp"
#include "tgadv/defense/baselines.hpp"
#include "tgadv/eval/protocol.hpp"
#include "tgadv/eval/ranking.hpp"
#include "tgadv/pipeline/run.hpp"
#include "tgadv/tgnn/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace tgadv;
using nn::Index;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

auto seconds_since(Clock::time_point t0) -> double {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

auto fmt(double x, int digits = 2) -> std::string {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// ------------------------------------------------------------ 1. assignment

auto ids(std::size_t n, NodeId offset) -> std::vector<NodeId> {
  std::vector<NodeId> out(n);
  std::iota(out.begin(), out.end(), offset);
  return out;
}

auto random_costs(std::size_t r, std::size_t c, std::mt19937_64& rng) -> Eigen::MatrixXd {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

/// Minimum over all injections of the smaller side into the larger.
auto exhaustive_min(const Eigen::MatrixXd& m) -> double {
  const bool flip = m.rows() > m.cols();
  const auto small = static_cast<std::size_t>(std::min(m.rows(), m.cols()));
  const auto large = static_cast<std::size_t>(std::max(m.rows(), m.cols()));
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < small; ++i) {
      const auto r = static_cast<Eigen::Index>(flip ? perm[i] : i);
      const auto c = static_cast<Eigen::Index>(flip ? i : perm[i]);
      total += m(r, c);
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

auto criterion_1() -> Outcome {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> square(1, 7);
  std::uniform_int_distribution<std::size_t> rows(1, 3);
  std::uniform_int_distribution<std::size_t> cols(1, 7);
  double worst = 0.0;
  for (int trial = 0; trial < 150; ++trial) {
    std::size_t r = 0;
    std::size_t c = 0;
    if (trial < 100) {
      r = c = square(rng);
    } else {
      r = rows(rng);
      c = cols(rng);
    }
    const auto m = random_costs(r, c, rng);
    const auto a = attack::solve_assignment(attack::CostMatrix(ids(r, 0), ids(c, 100), m));
    worst = std::max(worst, std::abs(a.total_cost - exhaustive_min(m)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0, "150 matrices, max |solver - exhaustive| = " + std::to_string(worst) + ", " +
                                           fmt(secs) + " s"};
}

// ------------------------------------------------------------ 2. compliance

auto criterion_2() -> Outcome {
  SyntheticSpec spec;  // 100 x 20 nodes, 2000 edges
  const auto g = generate_synthetic(spec);
  const auto splits = chronological_split(g);
  // Jaccard is undefined on bipartite graphs; it runs on the same edges read
  // as a unipartite graph.
  const DynamicGraph uni(g.interactions(), false, g.num_nodes());
  const auto uni_splits = chronological_split(uni);

  tgnn::TgnnHyper h;
  h.memory_dim = 16;
  h.time_dim = 16;
  h.edge_dim = g.edge_dim();
  tgnn::TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.batch_size = 100;
  tc.epochs = 5;
  tc.eval_negatives = 19;
  const auto surrogate = attack::train_surrogate(g, splits, h, tc).model;

  bool ok = true;
  double slowest = 0.0;
  std::ostringstream bad;
  int runs = 0;
  for (double p : {0.1, 0.3}) {
    attack::AttackConfig cfg;
    cfg.p = p;
    cfg.window = 200;
    cfg.seed = 7;
    const std::vector<std::string> kinds = {"tspear", "random", "pa", "jaccard", "struct_d", "struct_pr"};
    for (const auto& kind : kinds) {
      const auto t0 = Clock::now();
      attack::AttackResult r;
      if (kind == "tspear") {
        r = attack::run_tspear(g, splits, cfg, surrogate);
      } else if (kind == "jaccard") {
        r = attack::baseline_attack(uni, uni_splits, cfg, attack::BaselineKind::jaccard);
      } else {
        r = attack::baseline_attack(g, splits, cfg, attack::parse_baseline(kind));
      }
      const auto rep = attack::validate_constraints(r.corrupted, r.pset, 0.01);
      const double secs = seconds_since(t0);
      slowest = std::max(slowest, secs);
      ++runs;
      if (!rep.all() || secs >= 120.0) {
        ok = false;
        bad << ' ' << kind << "@p=" << p << (rep.violations.empty() ? "" : " (" + rep.violations.front() + ")");
      }
    }
  }
  return {ok, std::to_string(runs) + " runs, C1-C4 " + (ok ? "all satisfied" : "violated:" + bad.str()) +
                  ", slowest " + fmt(slowest) + " s"};
}

// ------------------------------------------------------------ 3. balance

auto criterion_3() -> Outcome {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  bool ok = true;
  std::size_t checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const bool bip = trial % 2 == 1;
    std::uniform_int_distribution<std::size_t> size(bip ? 1 : 2, bip ? 8 : 16);
    attack::CostMatrix c;
    if (bip) {
      const auto r = size(rng);
      const auto k = size(rng);
      c = attack::CostMatrix(ids(r, 0), ids(k, 100), random_costs(r, k, rng));
    } else {
      const auto n = size(rng);
      const Eigen::MatrixXd m = random_costs(n, n, rng);
      c = attack::CostMatrix(ids(n, 0), ids(n, 0), (0.5 * (m + m.transpose())).eval());
    }
    const auto e_max = attack::max_disjoint_pairs(c);
    const auto feasible = bip ? c.num_rows() * c.num_cols() : c.num_rows() * (c.num_rows() - 1) / 2;
    std::uniform_int_distribution<std::size_t> kd(1, feasible);
    const auto k = kd(rng);
    const auto hp = attack::hungarian_pool(c, k);
    const auto n = (k + e_max - 1) / e_max;
    std::map<NodeId, std::size_t> deg;
    for (const auto& p : hp.selected) {
      ++deg[p.u];
      if (p.v != p.u) ++deg[p.v];
    }
    for (const auto& [node, d] : deg) ok = ok && d <= n;
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& round : hp.rounds) {
      std::set<NodeId> in_round;
      for (const auto& p : round) {
        ok = ok && seen.insert(std::minmax(p.u, p.v)).second;
        ok = ok && in_round.insert(p.u).second;
        if (!bip) ok = ok && in_round.insert(p.v).second;
      }
    }
    checked += hp.selected.size();
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 5.0, "50 pools, " + std::to_string(checked) + " selected pairs, multiplicity <= N and " +
                                "round-wise disjointness " + (ok ? "hold" : "violated") + ", " + fmt(secs) + " s"};
}

// ------------------------------------------------------------ 4. gradients

auto small_hyper(Index edge_dim, std::uint64_t seed) -> tgnn::TgnnHyper {
  tgnn::TgnnHyper h;
  h.memory_dim = 4;
  h.time_dim = 3;
  h.edge_dim = edge_dim;
  h.dropout = 0.0;
  h.init_seed = seed;
  return h;
}

auto toy_graph(Index edge_dim) -> DynamicGraph {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<TemporalInteraction> es;
  for (int i = 0; i < 5; ++i) {
    TemporalInteraction e{static_cast<NodeId>(i % 3), static_cast<NodeId>(3 + (i * 2) % 3), 1.0 + i};
    if (edge_dim > 0) {
      e.features.resize(edge_dim);
      for (auto& x : e.features) x = z(rng);
    }
    es.push_back(e);
  }
  return DynamicGraph(es, true);
}

/// Link loss (lambda = 0) or link loss plus scaled L_tmp over edges 2..4 of
/// the toy graph, scored against the state after edges 0..1.
auto toy_objective(tgnn::TgnnModel& m, const DynamicGraph& g, const tgnn::TemporalState& state,
                   const defense::SmoothnessCache& cache, nn::Tape& tp, double lambda) -> nn::Var {
  tgnn::MemoryView mem(tp, m, state.bank, true);
  tgnn::EmbedContext ctx{tp, m, mem, state.neighbors, nullptr};
  std::vector<nn::Var> pos;
  std::vector<nn::Var> neg;
  std::vector<defense::EndpointEmbedding> items;
  const std::vector<NodeId> negs = {5, 3, 4};
  for (std::size_t i = 2; i < 5; ++i) {
    const auto& e = g[i];
    const nn::Var hu = tgnn::embed(ctx, e.u, e.t);
    const nn::Var hv = tgnn::embed(ctx, e.v, e.t);
    pos.push_back(tgnn::score_var(tp, m, hu, hv));
    neg.push_back(tgnn::score_var(tp, m, hu, tgnn::embed(ctx, negs[i - 2], e.t)));
    items.push_back({e.u, e.t, hu});
    items.push_back({e.v, e.t, hv});
  }
  nn::Var loss = tgnn::batch_link_loss(tp, pos, neg, {});
  if (lambda == 0.0) return loss;
  defense::SmoothnessCache c = cache;
  return tp.add(loss, tp.scale(defense::temporal_smoothness_loss(tp, items, c, 0.3), lambda / 3.0));
}

auto criterion_4() -> Outcome {
  const auto t0 = Clock::now();
  double worst_link = 0.0;
  double worst_tmp = 0.0;
  for (Index de : {Index{0}, Index{2}}) {
    for (double lambda : {0.0, 0.7}) {
      tgnn::TgnnModel m(small_hyper(de, 12));
      m.time_encoder().omega.value.setConstant(0.3);
      const auto g = toy_graph(de);
      auto state = tgnn::fresh_state(m, g);
      tgnn::warm_replay(m, state, g, {0, 2});
      defense::SmoothnessCache cache;
      std::mt19937_64 rng(5);
      std::normal_distribution<double> z(0.0, 1.0);
      for (NodeId n = 0; n < 6; ++n) {
        nn::Vec h(4);
        for (auto& x : h) x = z(rng);
        cache.last[n] = {h, 0.5};
      }
      auto loss = [&] {
        nn::Tape tp(false);
        return tp.scalar(toy_objective(m, g, state, cache, tp, lambda));
      };
      auto analytic = [&] {
        nn::Tape tp(true);
        tp.backward(toy_objective(m, g, state, cache, tp, lambda));
      };
      const double err = test::max_grad_error(m.parameters(), loss, analytic, 1e-6, 1000);
      (lambda == 0.0 ? worst_link : worst_tmp) = std::max(lambda == 0.0 ? worst_link : worst_tmp, err);
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max rel. error: link loss " << worst_link << ", link + L_tmp " << worst_tmp << ", " << fmt(secs) << " s";
  return {worst_link < 1e-4 && worst_tmp < 1e-4 && secs < 30.0, d.str()};
}

// ------------------------------------------------------------ 5. metrics

auto criterion_5() -> Outcome {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int trials = 2000;
  std::vector<double> ranks;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> negs(100);
    for (auto& x : negs) x = u(rng);
    ranks.push_back(eval::rank_from_scores(u(rng), negs));
  }
  double h1 = 0.0;
  double h2 = 0.0;
  for (int k = 1; k <= 101; ++k) {
    h1 += 1.0 / k;
    h2 += 1.0 / (static_cast<double>(k) * k);
  }
  const double mean_rr = h1 / 101.0;
  const double sigma_mrr = 100.0 * std::sqrt((h2 / 101.0 - mean_rr * mean_rr) / trials);
  const double ph = 10.0 / 101.0;
  const double sigma_hit = 100.0 * std::sqrt(ph * (1.0 - ph) / trials);
  const double mrr = eval::mrr_of(ranks);
  const double hit = eval::hit_at_k_of(ranks);
  const bool mrr_ok = std::abs(mrr - 100.0 * mean_rr) <= 3.0 * sigma_mrr;
  const bool hit_ok = std::abs(hit - 100.0 * ph) <= 3.0 * sigma_hit;

  std::uniform_int_distribution<int> level(0, 9);
  std::uniform_int_distribution<std::size_t> size(2, 200);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::pair<double, bool>> v;
    const auto n = size(rng);
    std::bernoulli_distribution adv(0.4);
    for (std::size_t i = 0; i < n; ++i) v.emplace_back(level(rng) / 10.0, adv(rng));
    v[0].second = false;
    v[1].second = true;
    double num = 0.0;
    double den = 0.0;
    for (const auto& a : v) {
      if (a.second) continue;
      for (const auto& b : v) {
        if (!b.second) continue;
        den += 1.0;
        num += a.first > b.first ? 1.0 : (a.first == b.first ? 0.5 : 0.0);
      }
    }
    worst = std::max(worst, std::abs(eval::auroc(v) - num / den));
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "MRR " << fmt(mrr, 3) << " vs " << fmt(100.0 * mean_rr, 3) << " (3 sigma " << fmt(3 * sigma_mrr, 3)
    << "), Hit@10 " << fmt(hit, 2) << " vs " << fmt(100.0 * ph, 2) << " (3 sigma " << fmt(3 * sigma_hit, 2)
    << "), AUROC max deviation " << worst << ", " << fmt(secs) << " s";
  return {mrr_ok && hit_ok && worst < 1e-12 && secs < 60.0, d.str()};
}

// ------------------------------------------------------------ 6, 7. benchmark

/// The desk benchmark: default synthetic graph, seeded per run, and a small
/// TGN trained long enough to converge.
auto benchmark_config(std::uint64_t seed) -> pipeline::ExperimentConfig {
  auto c = pipeline::apply_overrides(
      {}, {"model.memory_dim=16", "model.time_dim=16", "model.dropout=0.1", "train.learning_rate=3e-3",
           "train.batch_size=100", "train.epochs=40", "train.patience=10", "eval.negatives=19", "attack.p=0.3",
           "attack.window=200", "defense.variant=tshield", "defense.tau_start=0", "defense.tau_end=0.1",
           "defense.lambda=1"});
  c.synthetic.seed = seed;
  return c;
}

struct SeedRun {
  double clean = 0.0;
  double random = 0.0;
  double tspear = 0.0;
  double tshield = 0.0;
  double auroc = 0.5;
};

auto run_benchmark_seed(std::uint64_t seed) -> SeedRun {
  const auto cfg = benchmark_config(seed);
  const auto g = generate_synthetic(cfg.synthetic);
  const auto splits = chronological_split(g);
  const auto hyper = pipeline::seeded_hyper(cfg, g, seed);
  const auto tcfg = pipeline::seeded_train(cfg, seed);
  const auto opts = [&](eval::EdgeFilter f = {}) { return pipeline::protocol_options(cfg, seed, std::move(f)); };
  SeedRun out;

  const auto clean = tgnn::train(tgnn::TgnnModel(hyper), g, splits, tcfg);
  out.clean = eval::evaluate_protocol(clean.model, g, splits, opts()).test.mrr;

  const auto acfg = pipeline::seeded_attack(cfg, seed);
  const auto rnd = attack::baseline_attack(g, splits, acfg, attack::BaselineKind::random);
  const auto vr = tgnn::train(tgnn::TgnnModel(hyper), rnd.corrupted, rnd.splits, tcfg);
  out.random = eval::evaluate_protocol(vr.model, rnd.corrupted, rnd.splits, opts()).test.mrr;

  // The clean model doubles as the attacker's surrogate.
  const auto ts = attack::run_tspear(g, splits, acfg, clean.model);
  const auto vt = tgnn::train(tgnn::TgnnModel(hyper), ts.corrupted, ts.splits, tcfg);
  out.tspear = eval::evaluate_protocol(vt.model, ts.corrupted, ts.splits, opts()).test.mrr;

  const auto sh = defense::train_defended(ts.corrupted, ts.splits, hyper, tcfg, cfg.defense);
  out.tshield = eval::evaluate_protocol(sh.train.model, ts.corrupted, ts.splits, opts(sh.deployment_filter)).test.mrr;
  out.auroc = pipeline::filter_auroc(sh.ledger, ts.corrupted).value_or(0.5);
  return out;
}

auto criteria_6_7(Outcome& c6, Outcome& c7) {
  const auto t0 = Clock::now();
  std::vector<SeedRun> runs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    runs.push_back(run_benchmark_seed(seed));
    const auto& r = runs.back();
    std::printf("  seed %llu: clean %.2f  random %.2f  tspear %.2f  tshield %.2f  auroc %.3f\n",
                static_cast<unsigned long long>(seed), r.clean, r.random, r.tspear, r.tshield, r.auroc);
    std::fflush(stdout);
  }
  int tspear_below_random = 0;
  int random_below_clean = 0;
  int shield_ge_plain = 0;
  double auroc = 0.0;
  for (const auto& r : runs) {
    tspear_below_random += r.tspear < r.random ? 1 : 0;
    random_below_clean += r.random < r.clean ? 1 : 0;
    shield_ge_plain += r.tshield >= r.tspear ? 1 : 0;
    auroc += r.auroc / static_cast<double>(runs.size());
  }
  const double secs = seconds_since(t0);
  c6 = {tspear_below_random >= 4 && random_below_clean == 5,
        "T-Spear < Random in " + std::to_string(tspear_below_random) + "/5 seeds (need >= 4), Random < clean in " +
            std::to_string(random_below_clean) + "/5 (need 5), " + fmt(secs / 60.0, 1) + " min for 6 and 7"};
  c7 = {shield_ge_plain >= 4 && auroc > 0.55, "T-Shield >= plain TGN in " + std::to_string(shield_ge_plain) +
                                                  "/5 seeds (need >= 4), mean filtering AUROC " + fmt(auroc, 3) +
                                                  " (need > 0.55)"};
}

// ------------------------------------------------------------ 8. reductions

auto params_equal(const tgnn::TgnnModel& a, const tgnn::TgnnModel& b) -> bool {
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t k = 0; k < pa.size(); ++k) {
    if (pa[k]->value != pb[k]->value) return false;
  }
  return true;
}

auto criterion_8() -> Outcome {
  const auto t0 = Clock::now();
  SyntheticSpec spec;
  spec.edges = 600;
  spec.seed = 8;
  const auto g = generate_synthetic(spec);
  const auto splits = chronological_split(g);
  attack::AttackConfig acfg;
  acfg.p = 0.3;
  acfg.window = 200;
  const auto atk = attack::baseline_attack(g, splits, acfg, attack::BaselineKind::random);
  auto hyper = small_hyper(g.edge_dim(), 11);
  hyper.dropout = 0.2;
  tgnn::TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.batch_size = 100;
  tc.epochs = 4;
  tc.negative_seed = 4;
  tc.eval_negatives = 19;

  const auto plain = tgnn::train(tgnn::TgnnModel(hyper), atk.corrupted, atk.splits, tc);
  defense::DefenseConfig zero;
  zero.variant = defense::Variant::tshield;
  zero.tau_start = zero.tau_end = 0.0;
  zero.lambda = 0.0;
  const auto z = defense::train_defended(atk.corrupted, atk.splits, hyper, tc, zero);
  std::stringstream ca;
  std::stringstream cb;
  tgnn::write_checkpoint(ca, plain.model);
  tgnn::write_checkpoint(cb, z.train.model);
  const bool identity_a = params_equal(plain.model, z.train.model) && plain.train_loss == z.train.train_loss &&
                          plain.validation_mrr == z.train.validation_mrr && ca.str() == cb.str();

  defense::DefenseConfig f;
  f.variant = defense::Variant::tshield_f;
  f.tau_start = 0.05;
  f.tau_end = 0.3;
  f.lambda = 5.0;
  auto l0 = f;
  l0.variant = defense::Variant::tshield;
  l0.lambda = 0.0;
  const auto rf = defense::train_defended(atk.corrupted, atk.splits, hyper, tc, f);
  const auto r0 = defense::train_defended(atk.corrupted, atk.splits, hyper, tc, l0);
  const bool identity_b = params_equal(rf.train.model, r0.train.model) && rf.train.train_loss == r0.train.train_loss &&
                          rf.ledger.rows() == r0.ledger.rows() && rf.ledger.thresholds() == r0.ledger.thresholds();
  const double secs = seconds_since(t0);
  return {identity_a && identity_b && secs < 300.0,
          std::string("zero schedule + zero lambda vs plain: ") + (identity_a ? "bit-identical" : "DIFFERENT") +
              "; tshield_f vs tshield(lambda=0): " + (identity_b ? "termwise equal" : "DIFFERENT") + ", " +
              fmt(secs) + " s"};
}

// ------------------------------------------------------------ 9. determinism

auto criterion_9() -> Outcome {
  const auto t0 = Clock::now();
  const auto root = fs::temp_directory_path() / "tgadv_acceptance_c9";
  fs::remove_all(root);
  auto cfg = pipeline::apply_overrides(
      {}, {"synthetic.edges=500", "model.memory_dim=8", "model.time_dim=8", "train.learning_rate=3e-3",
           "train.batch_size=100", "train.epochs=3", "eval.seeds=0,1", "eval.negatives=19", "attack.kind=tspear",
           "attack.p=0.3", "attack.window=100", "defense.variant=tshield", "output.overwrite=true",
           "output.dir=" + root.string()});
  const auto first = pipeline::run_pipeline(cfg);
  const auto second = pipeline::run_pipeline(cfg);
  std::vector<std::string> problems;
  if (first.artifacts != second.artifacts) problems.emplace_back("artifact hashes differ between reruns");
  std::size_t manifests = 0;
  std::size_t checkpoints = 0;
  std::size_t reports = 0;
  for (const auto& [rel, sha] : first.artifacts) {
    manifests += rel.ends_with("manifest.csv") ? 1 : 0;
    checkpoints += rel.ends_with(".ckpt") ? 1 : 0;
    reports += rel.ends_with("report.json") ? 1 : 0;
  }
  if (manifests == 0 || checkpoints == 0 || reports == 0) problems.emplace_back("missing artifact kinds");
  if (!pipeline::verify_provenance(root).empty()) problems.emplace_back("provenance mismatch");

  // Each file reloads through its own loader and re-serializes to the same bytes.
  const auto tmp = root / "roundtrip";
  fs::create_directories(tmp);
  try {
    const auto g = load_interactions(root / "graph.csv");
    write_interactions(tmp / "graph.csv", g);
    if (read_file(tmp / "graph.csv") != read_file(root / "graph.csv")) problems.emplace_back("graph.csv");
    if (pipeline::load_config(root / "config.kv").to_key_values() != cfg.to_key_values()) {
      problems.emplace_back("config.kv");
    }
    for (const auto s : cfg.eval.seeds) {
      const auto sdir = root / pipeline::seed_dir_name(s);
      const auto m = load_perturbation_manifest(sdir / "manifest.csv");
      write_perturbation_manifest(tmp / "manifest.csv", m.graph, m.batch_ids);
      if (read_file(tmp / "manifest.csv") != read_file(sdir / "manifest.csv")) problems.emplace_back("manifest");
      for (const char* ck : {"model.ckpt", "surrogate.ckpt"}) {
        const auto c = tgnn::load_checkpoint(sdir / ck);
        tgnn::save_checkpoint(tmp / ck, c.model, c.seeds, c.scalars);
        if (read_file(tmp / ck) != read_file(sdir / ck)) problems.emplace_back(ck);
      }
      const auto ledger = defense::FilterLedger::load_csv(sdir / "ledger.csv");
      ledger.write_csv(tmp / "ledger.csv");
      if (read_file(tmp / "ledger.csv") != read_file(sdir / "ledger.csv")) problems.emplace_back("ledger.csv");
      const auto rep = pipeline::SeedReport::from_json(pipeline::read_json(sdir / "report.json"));
      pipeline::write_json(tmp / "report.json", rep.to_json());
      if (read_file(tmp / "report.json") != read_file(sdir / "report.json")) problems.emplace_back("seed report");
      const auto comp = pipeline::compliance_from_json(pipeline::read_json(sdir / "compliance.json"));
      pipeline::write_json(tmp / "compliance.json", pipeline::compliance_to_json(comp));
      if (read_file(tmp / "compliance.json") != read_file(sdir / "compliance.json")) problems.emplace_back("compliance");
    }
    const auto top = pipeline::read_json(root / "report.json");
    pipeline::write_json(tmp / "report.json", top);
    if (read_file(tmp / "report.json") != read_file(root / "report.json")) problems.emplace_back("run report");
  } catch (const std::exception& e) {
    problems.emplace_back(std::string("load failed: ") + e.what());
  }
  fs::remove_all(root);
  const double secs = seconds_since(t0);
  std::string detail = std::to_string(first.artifacts.size()) + " artifacts identical across reruns and round-tripped";
  if (!problems.empty()) {
    detail = "problems:";
    for (const auto& p : problems) detail += " " + p + ";";
  }
  return {problems.empty() && secs < 300.0, detail + ", " + fmt(secs) + " s"};
}

// ------------------------------------------------------------ 10. optional

auto criterion_10(const char* path) -> Outcome {
  auto cfg = pipeline::apply_overrides({}, {"eval.seeds=0", "data.path=" + std::string(path)});
  const auto g = pipeline::load_graph(cfg);
  const auto splits = chronological_split(g);
  const auto model = tgnn::train(tgnn::TgnnModel(pipeline::seeded_hyper(cfg, g, 0)), g, splits,
                                 pipeline::seeded_train(cfg, 0));
  const double mrr =
      eval::evaluate_protocol(model.model, g, splits, pipeline::protocol_options(cfg, 0, {})).test.mrr;
  return {std::abs(mrr - 80.5) <= 3.0, "clean test MRR " + fmt(mrr) + " (target 80.5 +/- 3.0)"};
}

void report(int id, const Outcome& o) {
  std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

auto main(int argc, char** argv) -> int {
  spdlog::set_level(spdlog::level::err);
  // `--quick` skips the two training benchmarks (6 and 7).
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  int failures = 0;
  const auto run = [&](int id, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    report(id, o);
  };
  run(1, criterion_1);
  run(2, criterion_2);
  run(3, criterion_3);
  run(4, criterion_4);
  run(5, criterion_5);
  if (quick) {
    std::printf("criterion 6: SKIP  (--quick)\ncriterion 7: SKIP  (--quick)\n");
  } else {
    Outcome c6;
    Outcome c7;
    try {
      criteria_6_7(c6, c7);
    } catch (const std::exception& e) {
      c6 = c7 = {false, std::string("threw: ") + e.what()};
    }
    failures += (c6.pass ? 0 : 1) + (c7.pass ? 0 : 1);
    report(6, c6);
    report(7, c7);
  }
  run(8, criterion_8);
  run(9, criterion_9);
  if (const char* wiki = std::getenv("TGADV_WIKIPEDIA_CSV"); wiki != nullptr && *wiki != '\0') {
    const auto o = [&] {
      try {
        return criterion_10(wiki);
      } catch (const std::exception& e) {
        return Outcome{false, std::string("threw: ") + e.what()};
      }
    }();
    report(10, o);  // optional: reported, never gating
  } else {
    std::printf("criterion 10: SKIP  (optional; set TGADV_WIKIPEDIA_CSV to a Wikipedia interaction file)\n");
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
