#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "tgadv/attack/tspear.hpp"
#include "tgadv/ctdg/synthetic.hpp"
#include "tgadv/eval/protocol.hpp"
#include "tgadv/eval/ranking.hpp"

namespace tgadv::eval {
namespace {

auto harmonic(int n, int power = 1) -> double {
  double h = 0.0;
  for (int k = 1; k <= n; ++k) h += 1.0 / std::pow(static_cast<double>(k), power);
  return h;
}

TEST(Rank, TieRuleAndBounds) {
  const std::vector<double> negs(100, 0.5);
  EXPECT_EQ(rank_from_scores(0.9, negs), 1.0);
  EXPECT_EQ(rank_from_scores(0.1, negs), 101.0);
  EXPECT_EQ(rank_from_scores(0.5, negs), 101.0);
  std::vector<double> mixed = {0.1, 0.7, 0.4, 0.7};
  EXPECT_EQ(rank_from_scores(0.7, mixed), 3.0);
  EXPECT_EQ(rank_from_scores(0.5, mixed), 3.0);
}

TEST(Rank, MonotoneInPositiveScore) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> negs(20);
    for (auto& x : negs) x = u(rng);
    double prev = 1e9;
    for (double p = 0.0; p <= 1.0; p += 0.05) {
      const double r = rank_from_scores(p, negs);
      EXPECT_GE(r, 1.0);
      EXPECT_LE(r, 21.0);
      EXPECT_LE(r, prev);
      prev = r;
    }
  }
}

TEST(Metrics, ArithmeticExamples) {
  const std::vector<double> ranks = {1.0, 101.0};
  EXPECT_NEAR(mrr_of(ranks), 100.0 * (1.0 + 1.0 / 101.0) / 2.0, 1e-12);
  EXPECT_NEAR(mrr_of(ranks), 50.495, 1e-3);
  EXPECT_EQ(hit_at_k_of(std::vector<double>{10.0}), 100.0);
  EXPECT_EQ(hit_at_k_of(std::vector<double>{11.0}), 0.0);
  EXPECT_EQ(mrr_of(std::vector<double>(5, 1.0)), 100.0);
  EXPECT_THROW(mrr_of(std::vector<double>{}), InputError);
  EXPECT_THROW(hit_at_k_of(std::vector<double>{}), InputError);
}

/// A uniform-random scorer places the positive uniformly among 101
/// candidates: E[MRR] = 100 H_101 / 101, E[Hit@10] = 100 * 10 / 101.
TEST(Metrics, RandomScorerMatchesClosedForm) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int trials = 2000;
  std::vector<double> ranks;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> negs(100);
    for (auto& x : negs) x = u(rng);
    ranks.push_back(rank_from_scores(u(rng), negs));
  }
  const double mean_rr = harmonic(101) / 101.0;
  const double var_rr = harmonic(101, 2) / 101.0 - mean_rr * mean_rr;
  const double sigma_mrr = 100.0 * std::sqrt(var_rr / trials);
  EXPECT_NEAR(100.0 * mean_rr, 5.1458, 1e-4);
  EXPECT_NEAR(mrr_of(ranks), 100.0 * mean_rr, 3.0 * sigma_mrr);
  const double ph = 10.0 / 101.0;
  const double sigma_hit = 100.0 * std::sqrt(ph * (1.0 - ph) / trials);
  EXPECT_NEAR(hit_at_k_of(ranks), 100.0 * ph, 3.0 * sigma_hit);
}

TEST(Negatives, UniformWithoutReplacementExcludingTarget) {
  std::vector<NodeId> pool(30);
  std::iota(pool.begin(), pool.end(), 100);
  std::map<NodeId, int> freq;
  const int trials = 6000;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed({5, static_cast<std::uint64_t>(t)}));
    const auto negs = sample_negatives(pool, 107, 10, rng);
    ASSERT_EQ(negs.size(), 10U);
    std::set<NodeId> distinct(negs.begin(), negs.end());
    EXPECT_EQ(distinct.size(), 10U);
    EXPECT_FALSE(distinct.contains(107));
    for (NodeId n : negs) ++freq[n];
  }
  // Each of the 29 candidates appears with probability 10/29.
  const double p = 10.0 / 29.0;
  const double sd = std::sqrt(trials * p * (1 - p));
  for (const auto& [n, c] : freq) EXPECT_NEAR(c, trials * p, 4.5 * sd) << n;
  EXPECT_EQ(freq.size(), 29U);
  Rng rng(1);
  EXPECT_EQ(sample_negatives(pool, 107, 100, rng).size(), 29U);
  EXPECT_EQ(sample_negatives(pool, 5, 100, rng).size(), 30U);
}

auto brute_auroc(const std::vector<std::pair<double, bool>>& v) -> double {
  double num = 0.0;
  double den = 0.0;
  for (const auto& g : v) {
    if (g.second) continue;
    for (const auto& a : v) {
      if (!a.second) continue;
      den += 1.0;
      num += g.first > a.first ? 1.0 : (g.first == a.first ? 0.5 : 0.0);
    }
  }
  return num / den;
}

TEST(Auroc, HandCaseAndExtremes) {
  const std::vector<std::pair<double, bool>> hand = {{0.9, false}, {0.8, false}, {0.7, true},
                                                     {0.6, false}, {0.5, true},  {0.4, true}};
  EXPECT_NEAR(auroc(hand), 8.0 / 9.0, 1e-15);
  const std::vector<std::pair<double, bool>> perfect = {{0.9, false}, {0.1, true}};
  EXPECT_EQ(auroc(perfect), 1.0);
  const std::vector<std::pair<double, bool>> flat = {{0.5, false}, {0.5, true}, {0.5, true}};
  EXPECT_EQ(auroc(flat), 0.5);
  EXPECT_THROW(auroc(std::vector<std::pair<double, bool>>{{0.1, false}}), InputError);
}

TEST(Auroc, MatchesPairCountingOracle) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> level(0, 9);
  std::uniform_int_distribution<std::size_t> size(2, 200);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<double, bool>> v;
    const auto n = size(rng);
    for (std::size_t i = 0; i < n; ++i) v.emplace_back(level(rng) / 10.0, i % 3 == 0);
    v[0].second = false;
    v[1].second = true;
    EXPECT_NEAR(auroc(v), brute_auroc(v), 1e-12);
  }
}

auto bench() -> DynamicGraph {
  SyntheticSpec s;
  s.edges = 500;
  s.sources = 30;
  s.destinations = 12;
  s.seed = 2;
  return generate_synthetic(s);
}

auto model_for(const DynamicGraph& g) -> tgnn::TgnnModel {
  tgnn::TgnnHyper h;
  h.memory_dim = 4;
  h.time_dim = 3;
  h.edge_dim = g.edge_dim();
  h.dropout = 0.0;
  h.init_seed = 4;
  return tgnn::TgnnModel(h);
}

TEST(Protocol, CleanGraphEvaluatesEverySplitEdge) {
  const auto g = bench();
  const auto splits = chronological_split(g);
  const auto m = model_for(g);
  const auto r = evaluate_protocol(m, g, splits, {});
  EXPECT_EQ(r.validation.num_evaluated, splits.validation.size());
  EXPECT_EQ(r.test.num_evaluated, splits.test.size());
  EXPECT_EQ(r.test.candidate_pool, 11U);
  EXPECT_GE(r.test.mrr, 0.0);
  EXPECT_LE(r.test.mrr, 100.0);
  EXPECT_LE(r.test.mrr, 100.0 * (r.test.hit10 / 100.0) + 100.0 / 11.0 * (1.0 - r.test.hit10 / 100.0) + 1e-9);
  const auto again = evaluate_protocol(m, g, splits, {});
  EXPECT_EQ(again.test.mrr, r.test.mrr);
  EXPECT_EQ(again.validation.mrr, r.validation.mrr);
}

TEST(Protocol, AttackedGraphRanksGroundTruthTestEdgesOnly) {
  const auto g = bench();
  const auto splits = chronological_split(g);
  attack::AttackConfig cfg;
  cfg.p = 0.3;
  cfg.window = 100;
  const auto atk = attack::baseline_attack(g, splits, cfg, attack::BaselineKind::random);
  const auto& cg = atk.corrupted;
  std::size_t test_genuine = 0;
  for (auto i = atk.splits.test.begin; i < atk.splits.test.end; ++i) test_genuine += cg[i].is_adversarial ? 0 : 1;
  EXPECT_EQ(test_genuine, splits.test.size());
  const auto m = model_for(cg);
  const auto r = evaluate_protocol(m, cg, atk.splits, {});
  EXPECT_EQ(r.test.num_evaluated, test_genuine);
  EXPECT_EQ(r.validation.num_evaluated, atk.splits.validation.size());
  EXPECT_GT(atk.splits.validation.size(), splits.validation.size());

  ProtocolOptions opts;
  opts.filter = [](const tgnn::TgnnModel&, const tgnn::TemporalState&, const TemporalInteraction& e) {
    return !e.is_adversarial;
  };
  const auto f = evaluate_protocol(m, cg, atk.splits, opts);
  EXPECT_EQ(f.test.num_evaluated, test_genuine);
  EXPECT_EQ(f.validation.num_evaluated, splits.validation.size());
}

/// The zero scorer ties every candidate, so the pessimistic rule ranks last.
TEST(Protocol, ZeroScorerRanksLast) {
  const auto g = bench();
  const auto splits = chronological_split(g);
  auto m = model_for(g);
  for (auto* p : {&m.scorer().w1, &m.scorer().b1, &m.scorer().w2, &m.scorer().b2}) p->value.setZero();
  const auto r = evaluate_protocol(m, g, splits, {});
  EXPECT_NEAR(r.test.mrr, 100.0 / 12.0, 1e-12);
  EXPECT_EQ(r.test.hit10, 0.0);
}

}  // namespace
}  // namespace tgadv::eval
