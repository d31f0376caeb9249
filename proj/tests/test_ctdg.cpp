#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/ctdg/io.hpp"
#include "tgadv/ctdg/kde.hpp"
#include "tgadv/util/hash.hpp"
#include "tgadv/util/kv.hpp"
#include "tgadv/util/stats.hpp"
#include "test_util.hpp"

namespace tgadv {
namespace {

auto edges_at(std::initializer_list<double> ts) -> std::vector<TemporalInteraction> {
  std::vector<TemporalInteraction> out;
  NodeId k = 0;
  for (double t : ts) {
    out.push_back({k % 3, 3 + k % 2, t, {}, false});
    ++k;
  }
  return out;
}

TEST(DynamicGraph, SortsStablyByTime) {
  std::vector<TemporalInteraction> es = {{0, 1, 5.0}, {2, 3, 1.0}, {4, 5, 5.0}, {6, 7, 1.0}};
  DynamicGraph g(es, false);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g[0].u, 2);
  EXPECT_EQ(g[1].u, 6);
  EXPECT_EQ(g[2].u, 0);
  EXPECT_EQ(g[3].u, 4);
  EXPECT_EQ(g.num_nodes(), 8);
}

TEST(DynamicGraph, RejectsBadInput) {
  EXPECT_THROW(DynamicGraph({{0, 1, -1.0}}, false), InputError);
  EXPECT_THROW(DynamicGraph({{0, 1, NAN}}, false), InputError);
  EXPECT_THROW(DynamicGraph({{-1, 1, 0.0}}, false), InputError);
  TemporalInteraction a{0, 1, 0.0, Eigen::VectorXd::Zero(2)};
  TemporalInteraction b{0, 1, 1.0, Eigen::VectorXd::Zero(3)};
  EXPECT_THROW(DynamicGraph({a, b}, false), InputError);
}

TEST(DynamicGraph, BipartiteSidesAreDisjointSets) {
  DynamicGraph g({{0, 10, 0.0}, {1, 11, 1.0}, {0, 11, 2.0}}, true);
  EXPECT_EQ(g.source_ids(), (std::vector<NodeId>{0, 1}));
  EXPECT_EQ(g.destination_ids(), (std::vector<NodeId>{10, 11}));
  DynamicGraph h({{0, 10, 0.0}, {1, 11, 1.0}}, false);
  EXPECT_EQ(h.source_ids(), (std::vector<NodeId>{0, 1, 10, 11}));
  EXPECT_EQ(h.destination_ids(), h.source_ids());
}

TEST(ChronologicalSplit, SeventyFifteenFifteen) {
  std::vector<TemporalInteraction> es;
  for (int i = 0; i < 1000; ++i) es.push_back({0, 1, static_cast<double>(i)});
  const auto s = chronological_split(DynamicGraph(es, false));
  EXPECT_EQ(s.train, (IndexRange{0, 700}));
  EXPECT_EQ(s.validation, (IndexRange{700, 850}));
  EXPECT_EQ(s.test, (IndexRange{850, 1000}));
}

TEST(ChronologicalSplit, SmallGraphsAndErrors) {
  const auto g = DynamicGraph(edges_at({0, 1, 2}), false);
  EXPECT_THROW(chronological_split(DynamicGraph(edges_at({0, 1}), false)), InputError);
  EXPECT_THROW(chronological_split(g, {0.5, 0.5, 0.0}), InputError);
  EXPECT_THROW(chronological_split(g, {0.5, 0.4, 0.2}), InputError);
  std::vector<TemporalInteraction> es;
  for (int i = 0; i < 30; ++i) es.push_back({0, 1, static_cast<double>(i)});
  const auto s = chronological_split(DynamicGraph(es, false));
  EXPECT_EQ(s.train.size(), 21u);
}

TEST(ChronologicalSplit, PartitionProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 3 + rng() % 500;
    std::vector<TemporalInteraction> es(n, TemporalInteraction{0, 1, 0.0});
    const auto s = chronological_split(DynamicGraph(es, false));
    EXPECT_EQ(s.train.begin, 0u);
    EXPECT_EQ(s.train.end, s.validation.begin);
    EXPECT_EQ(s.validation.end, s.test.begin);
    EXPECT_EQ(s.test.end, n);
  }
}

TEST(BatchIter, CoversEveryEdgeOnce) {
  const auto b = batch_iter(1300, 600);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[2], (IndexRange{1200, 1300}));
  EXPECT_THROW(batch_iter(10, 0), InputError);
  const auto r = batch_iter(IndexRange{10, 25}, 10);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (IndexRange{10, 20}));
  EXPECT_EQ(r[1], (IndexRange{20, 25}));
}

TEST(WindowNodes, EndpointsOfPrecedingEdges) {
  DynamicGraph g({{0, 1, 0.0}, {2, 3, 1.0}, {4, 5, 2.0}, {6, 7, 3.0}}, false);
  EXPECT_EQ(window_nodes(g, 2, 2).all(), (std::vector<NodeId>{2, 3, 4, 5}));
  EXPECT_EQ(window_nodes(g, 1, 10).all(), (std::vector<NodeId>{0, 1, 2, 3}));
  EXPECT_TRUE(window_nodes(g, 3, 0).all().empty());
  EXPECT_THROW(window_nodes(g, 4, 1), InputError);
}

TEST(Io, RoundTripIsBitExact) {
  test::TempDir dir;
  std::vector<TemporalInteraction> es;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd f(3);
    f << z(rng), z(rng) * 1e-9, z(rng) * 1e12;
    es.push_back({static_cast<NodeId>(rng() % 5), static_cast<NodeId>(5 + rng() % 4), i * 0.1 + 1e-3, f});
  }
  DynamicGraph g(es, true, 12);
  const auto path = dir.path() / "edges.csv";
  write_interactions(path, g);
  const auto back = load_interactions(path);
  ASSERT_EQ(back.size(), g.size());
  EXPECT_EQ(back.num_nodes(), 12);
  EXPECT_TRUE(back.bipartite());
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(back[i].u, g[i].u);
    EXPECT_EQ(back[i].v, g[i].v);
    EXPECT_EQ(back[i].t, g[i].t);
    EXPECT_EQ(back[i].features, g[i].features);
  }
}

TEST(Io, ErrorsAreReported) {
  test::TempDir dir;
  EXPECT_THROW(load_interactions(dir.path() / "absent.csv", ColumnMapping{}), InputError);
  const auto write = [&](const char* name, const char* text) {
    std::ofstream(dir.path() / name) << text;
    return dir.path() / name;
  };
  EXPECT_THROW(load_interactions(write("a.csv", "u,v,t\n0,1,x\n"), ColumnMapping{}), InputError);
  EXPECT_THROW(load_interactions(write("b.csv", "0,1,-2\n"), ColumnMapping{}), InputError);
  EXPECT_THROW(load_interactions(write("c.csv", "0,1,0,1.0,2.0\n0,1,1,1.0\n"), ColumnMapping{}), InputError);
  EXPECT_THROW(load_interactions(write("d.csv", "u,v,t\n"), ColumnMapping{}), InputError);
}

TEST(Io, JodieStyleReindexing) {
  test::TempDir dir;
  const auto p = dir.path() / "j.csv";
  std::ofstream(p) << "user,item,ts,label,f0\n0,0,0.0,0,0.5\n1,0,1.0,0,0.25\n2,1,2.0,0,0.125\n";
  ColumnMapping m;
  m.feature_begin = 4;
  m.bipartite = true;
  m.reindex_destinations = true;
  const auto g = load_interactions(p, m);
  EXPECT_EQ(g.destination_ids(), (std::vector<NodeId>{3, 4}));
  EXPECT_EQ(g.edge_dim(), 1);
  EXPECT_EQ(g[2].features[0], 0.125);
}

TEST(Io, ManifestRoundTrip) {
  test::TempDir dir;
  std::vector<TemporalInteraction> es = {{0, 5, 0.0}, {1, 6, 1.5}, {2, 5, 1.5, {}, true}, {0, 6, 3.25}};
  DynamicGraph g(es, true);
  const std::vector<std::size_t> ids = {0, 0, 1, 1};
  const auto p = dir.path() / "m.csv";
  write_perturbation_manifest(p, g, ids);
  const auto back = load_perturbation_manifest(p);
  EXPECT_EQ(back.batch_ids, ids);
  ASSERT_EQ(back.graph.size(), 4u);
  EXPECT_TRUE(back.graph[2].is_adversarial);
  EXPECT_FALSE(back.graph[1].is_adversarial);
  EXPECT_EQ(back.graph[3].t, 3.25);
  EXPECT_TRUE(back.graph.bipartite());
}

TEST(KeyValues, ParseAndErrors) {
  std::istringstream in("# comment\nattack.p = 0.3\n\ntrain.epochs=5\n");
  const auto kv = parse_key_values(in, "x");
  EXPECT_EQ(kv.at("attack.p"), "0.3");
  EXPECT_EQ(parse_int(kv.at("train.epochs")), 5);
  std::istringstream bad("novalue\n");
  EXPECT_THROW(parse_key_values(bad, "x"), InputError);
  EXPECT_THROW(parse_double("abc"), InputError);
  EXPECT_TRUE(parse_bool("true"));
}

TEST(Hash, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Kde, SamplesStayInRangeAndSorted) {
  std::vector<double> ts;
  for (int i = 0; i < 200; ++i) ts.push_back(i * i * 0.01);
  KdeSampler kde(ts, 0.1, 5);
  const auto s = kde.sample_in(500, 10.0, 20.0);
  ASSERT_EQ(s.size(), 500u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  for (double x : s) {
    EXPECT_GE(x, 10.0);
    EXPECT_LE(x, 20.0);
  }
  EXPECT_EQ(kde.sample_in(3, 4.0, 4.0), (std::vector<double>{4.0, 4.0, 4.0}));
  EXPECT_THROW(kde.sample_in(1, 2.0, 1.0), InputError);
  EXPECT_THROW(KdeSampler({}, 0.1, 0), InputError);
  EXPECT_THROW(KdeSampler({1.0}, 0.0, 0), InputError);
}

TEST(Kde, DrawsFollowTheMixtureCdf) {
  // Oracle: the KDE's own closed-form CDF; 4000 draws, one-sample KS at 1%.
  std::vector<double> pts = {0.0, 1.0, 1.5, 4.0, 9.0, 9.5, 10.0};
  KdeSampler kde(pts, 0.1, 11);
  std::vector<double> xs;
  for (int i = 0; i < 4000; ++i) xs.push_back(kde.sample_normalized());
  const double d = stats::ks_one_sample(xs, [&](double x) { return kde.cdf_normalized(x); });
  EXPECT_LT(d, stats::ks_critical_one_sample(xs.size(), 0.01));
}

TEST(Kde, UniformFallbackWhenIntervalHasNoMass) {
  KdeSampler kde({0.0, 0.001}, 0.001, 1, std::make_pair(0.0, 1.0));
  const auto s = kde.sample_in(5, 0.5, 0.6);
  EXPECT_EQ(kde.fallback_count(), 5u);
  for (double x : s) {
    EXPECT_GE(x, 0.5);
    EXPECT_LE(x, 0.6);
  }
}

TEST(Kde, ZeroWidthRangeMapsToMidpoint) {
  KdeSampler kde({3.0, 3.0}, 0.1, 1);
  EXPECT_EQ(kde.normalize(3.0), 0.5);
  EXPECT_EQ(kde.denormalize(0.7), 3.0);
}

TEST(Kde, FeatureKdeIsSeedDeterministic) {
  std::vector<TemporalInteraction> es;
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd f(2);
    f << i, -i;
    es.push_back({0, 1, static_cast<double>(i), f});
  }
  DynamicGraph g(es, false);
  auto a = fit_feature_kde(g, {0, 20}, 0.1, 9);
  auto b = fit_feature_kde(g, {0, 20}, 0.1, 9);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.sample(), b.sample());
}

TEST(Stats, KsTwoSampleOracle) {
  // Oracle: brute-force sup over the pooled sample points.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(1 + rng() % 30);
    std::vector<double> b(1 + rng() % 30);
    for (auto& x : a) x = std::round(u(rng) * 10) / 10;
    for (auto& x : b) x = std::round(u(rng) * 10) / 10;
    double brute = 0.0;
    for (const auto& pool : {a, b}) {
      for (double x : pool) {
        const auto fa = static_cast<double>(std::count_if(a.begin(), a.end(), [x](double y) { return y <= x; }));
        const auto fb = static_cast<double>(std::count_if(b.begin(), b.end(), [x](double y) { return y <= x; }));
        brute = std::max(brute, std::abs(fa / a.size() - fb / b.size()));
      }
    }
    EXPECT_NEAR(stats::ks_two_sample(a, b), brute, 1e-15);
  }
}

TEST(Stats, KsCoefficientAndStd) {
  EXPECT_NEAR(stats::ks_coefficient(0.01), 1.6276, 1e-4);
  EXPECT_NEAR(stats::ks_coefficient(0.05), 1.3581, 1e-4);
  EXPECT_NEAR(stats::sample_std({1.0, 2.0, 3.0, 4.0}), std::sqrt(5.0 / 3.0), 1e-15);
}

}  // namespace
}  // namespace tgadv
