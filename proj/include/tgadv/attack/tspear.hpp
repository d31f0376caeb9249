#pragma once

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tgadv/attack/baselines.hpp"
#include "tgadv/attack/selection.hpp"
#include "tgadv/ctdg/graph.hpp"
#include "tgadv/ctdg/kde.hpp"
#include "tgadv/tgnn/forward.hpp"
#include "tgadv/tgnn/train.hpp"
#include "tgadv/util/error.hpp"
#include "tgadv/util/rng.hpp"
#include "tgadv/util/stats.hpp"

namespace tgadv::attack {

enum class Selection { naive, low_k, hungarian };

inline auto to_string(Selection s) -> std::string {
  switch (s) {
    case Selection::naive: return "naive";
    case Selection::low_k: return "low_k";
    case Selection::hungarian: return "hungarian";
  }
  return "?";
}

inline auto parse_selection(std::string_view s) -> Selection {
  if (s == "naive") return Selection::naive;
  if (s == "low_k") return Selection::low_k;
  if (s == "hungarian") return Selection::hungarian;
  throw InputError("unknown selection strategy '" + std::string(s) + "'");
}

struct AttackConfig {
  double p = 0.1;
  std::size_t window = 1200;
  Selection selection = Selection::hungarian;
  std::uint64_t seed = 0;
  double kde_bandwidth = KdeSampler::kDefaultBandwidth;

  /// B = floor(W / 2).
  [[nodiscard]] auto batch_size() const -> std::size_t { return window / 2; }
  /// K = floor(p * B).
  [[nodiscard]] auto per_batch() const -> std::size_t {
    return static_cast<std::size_t>(std::floor(p * static_cast<double>(batch_size()) + 1e-9));
  }
  /// Delta = floor(p * |E|).
  [[nodiscard]] auto budget(std::size_t num_edges) const -> std::size_t {
    return static_cast<std::size_t>(std::floor(p * static_cast<double>(num_edges) + 1e-9));
  }

  void check() const {
    if (!(p > 0.0 && p <= 1.0)) throw InputError("attack rate p must lie in (0, 1]");
    if (window < 2) throw InputError("attack window must be at least 2");
    if (!(kde_bandwidth > 0.0)) throw InputError("KDE bandwidth must be positive");
  }
};

/// An injected interaction with the batch that produced it and the range of
/// original edges whose endpoints formed its candidate pool.
struct AdversarialEdge {
  TemporalInteraction edge;
  std::size_t batch = 0;
  IndexRange pool;
};

struct PerturbationSet {
  std::string kind;  // "tspear" or a baseline name
  AttackConfig config;
  std::size_t original_size = 0;
  std::vector<AdversarialEdge> edges;
  std::vector<std::size_t> per_batch_n;  // N per batch (0: nothing injected)
  std::vector<std::size_t> skipped_batches;
  std::vector<std::size_t> shortfall_batches;
};

struct AttackResult {
  DynamicGraph corrupted;
  PerturbationSet pset;
  SplitBundle splits;                  // split ranges remapped onto the corrupted graph
  std::vector<std::size_t> batch_ids;  // per corrupted edge
};

/// What a selection strategy returns for one batch.
struct BatchChoice {
  std::vector<SelectedPair> pairs;
  std::vector<IndexRange> pools;  // per pair; empty: the batch pool
  std::size_t n = 0;
  bool shortfall = false;
  bool aligned = false;  // pair i belongs to sorted timestamp i
};

/// Inputs handed to a selection strategy for batch b.
struct BatchContext {
  std::size_t batch = 0;
  IndexRange range;       // original edges of batch b
  IndexRange pool_range;  // original edges of batch b - 1
  NodePool pool;
  std::vector<double> timestamps;  // sorted
  std::size_t k = 0;
};

namespace detail {

inline auto can_supply(const NodePool& pool, std::size_t k) -> bool {
  if (pool.bipartite) return !pool.sources.empty() && !pool.destinations.empty() &&
                             pool.sources.size() * pool.destinations.size() >= k;
  const auto n = pool.sources.size();
  return n >= 2 && n * (n - 1) / 2 >= k;
}

inline auto e_max(const NodePool& pool) -> std::size_t {
  return pool.bipartite ? std::min(pool.sources.size(), pool.destinations.size()) : pool.sources.size() / 2;
}

/// Merges originals and adversarial edges (originals first at equal times)
/// and maps the split boundaries onto the merged order.
inline auto merge(const DynamicGraph& g, const SplitBundle& splits, const PerturbationSet& pset,
                  std::size_t batch_size) -> AttackResult {
  std::vector<const AdversarialEdge*> adv;
  for (const auto& a : pset.edges) adv.push_back(&a);
  std::stable_sort(adv.begin(), adv.end(), [](const auto* a, const auto* b) { return a->edge.t < b->edge.t; });
  std::vector<TemporalInteraction> out;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> pos_of_original(g.size() + 1, 0);
  out.reserve(g.size() + adv.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    while (j < adv.size() && adv[j]->edge.t < g[i].t) {
      out.push_back(adv[j]->edge);
      ids.push_back(adv[j]->batch);
      ++j;
    }
    pos_of_original[i] = out.size();
    out.push_back(g[i]);
    ids.push_back(i / batch_size);
  }
  for (; j < adv.size(); ++j) {
    out.push_back(adv[j]->edge);
    ids.push_back(adv[j]->batch);
  }
  pos_of_original[g.size()] = out.size();
  AttackResult r;
  const auto total = out.size();
  r.corrupted = DynamicGraph(std::move(out), g.bipartite(), g.num_nodes());
  r.batch_ids = std::move(ids);
  r.pset = pset;
  const auto at = [&](std::size_t orig) { return pos_of_original[orig]; };
  r.splits.train = {0, at(splits.validation.begin)};
  r.splits.validation = {at(splits.validation.begin), at(splits.test.begin)};
  r.splits.test = {at(splits.test.begin), total};
  return r;
}

}  // namespace detail

/// Split ranges of a corrupted graph, rebuilt from its genuine edges: each
/// split starts at the position of its first genuine edge.
inline auto corrupted_splits(const DynamicGraph& corrupted) -> SplitBundle {
  const auto base = chronological_split(corrupted.genuine());
  std::vector<std::size_t> pos;
  pos.reserve(base.test.end + 1);
  for (std::size_t i = 0; i < corrupted.size(); ++i) {
    if (!corrupted[i].is_adversarial) pos.push_back(i);
  }
  pos.push_back(corrupted.size());
  SplitBundle s;
  s.train = {0, pos[base.validation.begin]};
  s.validation = {pos[base.validation.begin], pos[base.test.begin]};
  s.test = {pos[base.test.begin], corrupted.size()};
  return s;
}

/// Shared batching, timing and feature machinery. `choose(ctx, rng)` picks
/// endpoint pairs; `advance(range)` is called after each batch so stateful
/// strategies can consume the batch's original edges.
template <class Choose, class Advance>
auto inject_batches(const DynamicGraph& g, const SplitBundle& splits, const AttackConfig& cfg, std::string kind,
                    Choose&& choose, Advance&& advance) -> AttackResult {
  cfg.check();
  if (g.size() < 2) throw InputError("attack needs at least two interactions");
  const auto bsz = cfg.batch_size();
  const auto k_full = cfg.per_batch();
  const auto budget = cfg.budget(g.size());
  const auto batches = batch_iter(g, bsz);
  auto time_kde = fit_time_kde(g, cfg.kde_bandwidth, derive_seed({cfg.seed, 0x74696d65ULL}));

  PerturbationSet pset;
  pset.kind = std::move(kind);
  pset.config = cfg;
  pset.original_size = g.size();
  pset.per_batch_n.assign(batches.size(), 0);

  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto k = std::min(k_full, budget - pset.edges.size());
    if (b >= 1 && k > 0) {
      BatchContext ctx;
      ctx.batch = b;
      ctx.range = batches[b];
      ctx.pool_range = batches[b - 1];
      ctx.pool = pool_of(g, ctx.pool_range);
      ctx.k = k;
      if (!detail::can_supply(ctx.pool, k)) {
        spdlog::warn("batch {}: pool too small for {} selections, skipped", b, k);
        pset.skipped_batches.push_back(b);
      } else {
        Rng rng(derive_seed({cfg.seed, 0x62617463ULL, b}));
        const double t_lo = g[ctx.range.begin].t;
        const double t_hi = g[ctx.range.end - 1].t;
        ctx.timestamps = time_kde.sample_in(k, t_lo, t_hi, rng);
        BatchChoice choice = choose(ctx, rng);
        const auto m = choice.pairs.size();
        if (choice.shortfall || m < k) pset.shortfall_batches.push_back(b);
        std::vector<std::size_t> order(ctx.timestamps.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (!choice.aligned) std::shuffle(order.begin(), order.end(), rng);
        std::optional<FeatureKde> feats;
        if (g.edge_dim() > 0 && m > 0) {
          const auto start = ctx.range.begin;
          const auto first = start >= cfg.window ? start - cfg.window : 0;
          feats.emplace(fit_feature_kde(g, {first, start}, cfg.kde_bandwidth, derive_seed({cfg.seed, 0x66656174ULL, b})));
        }
        for (std::size_t i = 0; i < m; ++i) {
          const auto& pr = choice.pairs[i];
          AdversarialEdge a;
          a.edge.u = pr.u;
          a.edge.v = pr.v;
          a.edge.t = ctx.timestamps[order[i]];
          a.edge.is_adversarial = true;
          if (feats) a.edge.features = feats->sample(rng);
          a.batch = b;
          a.pool = choice.pools.empty() ? ctx.pool_range : choice.pools[i];
          pset.edges.push_back(std::move(a));
        }
        pset.per_batch_n[b] = m > 0 ? choice.n : 0;
      }
    }
    advance(batches[b]);
  }
  return detail::merge(g, splits, pset, bsz);
}

/// Rounds up K / E_max for a pool.
inline auto multiplicity_cap(const NodePool& pool, std::size_t k) -> std::size_t {
  const auto e = detail::e_max(pool);
  return e == 0 ? 0 : (k + e - 1) / e;
}

/// T-Spear with a trained surrogate: score the previous batch's pool at the
/// first sampled timestamp and select pairs by the configured strategy.
/// The surrogate's memory replays original edges only; parameters stay frozen.
inline auto run_tspear(const DynamicGraph& g, const SplitBundle& splits, const AttackConfig& cfg,
                       const tgnn::TgnnModel& surrogate) -> AttackResult {
  auto state = tgnn::fresh_state(surrogate, g);
  const auto advance = [&](IndexRange r) {
    for (auto i = r.begin; i < r.end; ++i) tgnn::observe(surrogate, state, g[i]);
  };
  const auto choose = [&](const BatchContext& ctx, Rng&) -> BatchChoice {
    BatchChoice out;
    out.n = multiplicity_cap(ctx.pool, ctx.k);
    switch (cfg.selection) {
      case Selection::hungarian: {
        auto hp = hungarian_pool(score_pool(surrogate, state, ctx.pool, ctx.timestamps.front()), ctx.k);
        out.pairs = std::move(hp.selected);
        out.shortfall = hp.shortfall;
        out.n = hp.n;
        break;
      }
      case Selection::low_k:
        out.pairs = low_k_select(score_pool(surrogate, state, ctx.pool, ctx.timestamps.front()), ctx.k);
        break;
      case Selection::naive: {
        // Window pools per sampled timestamp; memory stays at the batch boundary.
        out.aligned = true;
        for (double t : ctx.timestamps) {
          const auto& es = g.interactions();
          const auto it = std::upper_bound(es.begin(), es.end(), t,
                                           [](double x, const TemporalInteraction& e) { return x < e.t; });
          const auto last = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - es.begin()) - 1));
          const auto first = last + 1 >= cfg.window ? last + 1 - cfg.window : 0;
          const IndexRange wr{first, last + 1};
          const auto wpool = pool_of(g, wr);
          if (!detail::can_supply(wpool, 1)) continue;
          out.pairs.push_back(naive_select(score_pool(surrogate, state, wpool, t)));
          out.pools.push_back(wr);
        }
        break;
      }
    }
    return out;
  };
  return inject_batches(g, splits, cfg, "tspear", choose, advance);
}

/// Trains a surrogate on the clean train split.
inline auto train_surrogate(const DynamicGraph& g, const SplitBundle& splits, const tgnn::TgnnHyper& hyper,
                            const tgnn::TrainConfig& train_cfg) -> tgnn::TrainResult {
  return tgnn::train(tgnn::TgnnModel(hyper), g, splits, train_cfg);
}

/// Structural baselines on the plain graph of original edges before each
/// batch, selected with the same Hungarian pooling; Random samples pairs
/// uniformly under the per-node cap.
inline auto baseline_attack(const DynamicGraph& g, const SplitBundle& splits, const AttackConfig& cfg,
                            BaselineKind kind) -> AttackResult {
  if (kind == BaselineKind::jaccard && g.bipartite()) {
    throw InputError("jaccard baseline cannot be applied to bipartite graphs");
  }
  PlainGraph pg(g.num_nodes());
  const auto advance = [&](IndexRange r) { pg.add_range(g, r); };
  const auto choose = [&](const BatchContext& ctx, Rng& rng) -> BatchChoice {
    BatchChoice out;
    if (kind != BaselineKind::random) {
      auto hp = hungarian_pool(statistic_costs(pg, ctx.pool, kind), ctx.k);
      out.pairs = std::move(hp.selected);
      out.shortfall = hp.shortfall;
      out.n = hp.n;
      return out;
    }
    out.n = multiplicity_cap(ctx.pool, ctx.k);
    const auto& src = ctx.pool.sources;
    const auto& dst = ctx.pool.destinations;
    std::map<NodeId, std::size_t> used;
    std::uniform_int_distribution<std::size_t> ps(0, src.size() - 1);
    std::uniform_int_distribution<std::size_t> pd(0, dst.size() - 1);
    const std::size_t max_attempts = 1000 + 100 * ctx.k;
    for (std::size_t attempt = 0; attempt < max_attempts && out.pairs.size() < ctx.k; ++attempt) {
      NodeId u = src[ps(rng)];
      NodeId v = dst[pd(rng)];
      if (u == v) continue;
      if (used[u] >= out.n || used[v] >= out.n) continue;
      if (!ctx.pool.bipartite && u > v) std::swap(u, v);
      ++used[u];
      ++used[v];
      out.pairs.push_back({u, v, 0.0});
    }
    out.shortfall = out.pairs.size() < ctx.k;
    return out;
  };
  return inject_batches(g, splits, cfg, to_string(kind), choose, advance);
}

/// Outcome of checking a corrupted graph against the four constraints.
struct ComplianceReport {
  bool c1 = true;
  bool c2 = true;
  bool c3 = true;
  bool c4 = true;
  bool consistent = true;  // pset agrees with the graph's adversarial flags
  std::size_t budget = 0;
  std::size_t injected = 0;
  double ks_statistic = 0.0;
  double ks_critical = 0.0;
  double alpha = 0.01;
  std::size_t self_loops = 0;
  std::vector<std::string> violations;

  [[nodiscard]] auto all() const -> bool { return c1 && c2 && c3 && c4 && consistent; }
};

/// C1 budget, C2 two-sample KS on normalized timestamps, C3 endpoint
/// locality, C4 per-(batch, node) multiplicity. Never throws on violations.
inline auto validate_constraints(const DynamicGraph& corrupted, const PerturbationSet& pset, double alpha = 0.01)
    -> ComplianceReport {
  ComplianceReport rep;
  rep.alpha = alpha;
  const auto original = corrupted.genuine();
  rep.injected = pset.edges.size();
  rep.budget = pset.config.budget(original.size());
  if (corrupted.adversarial_count() != pset.edges.size() || original.size() != pset.original_size) {
    rep.consistent = false;
    rep.violations.push_back("perturbation set does not match the graph's adversarial flags");
  }
  rep.c1 = rep.injected <= rep.budget;
  if (!rep.c1) rep.violations.push_back("C1: " + std::to_string(rep.injected) + " > " + std::to_string(rep.budget));

  if (!pset.edges.empty() && !original.empty()) {
    const auto ts = original.timestamps();
    const auto [mn, mx] = std::minmax_element(ts.begin(), ts.end());
    const double lo = *mn;
    const double span = *mx - *mn;
    const auto norm = [&](double t) { return span > 0 ? (t - lo) / span : 0.5; };
    std::vector<double> a;
    std::vector<double> o;
    for (const auto& e : pset.edges) a.push_back(norm(e.edge.t));
    for (double t : ts) o.push_back(norm(t));
    rep.ks_statistic = stats::ks_two_sample(a, o);
    rep.ks_critical = stats::ks_critical_two_sample(a.size(), o.size(), alpha);
    rep.c2 = rep.ks_statistic < rep.ks_critical;
    if (!rep.c2) {
      rep.violations.push_back("C2: KS " + std::to_string(rep.ks_statistic) + " >= " + std::to_string(rep.ks_critical));
    }
  }

  std::map<std::pair<std::size_t, NodeId>, std::size_t> counts;
  for (std::size_t i = 0; i < pset.edges.size(); ++i) {
    const auto& a = pset.edges[i];
    const auto& e = a.edge;
    if (e.u == e.v) {
      ++rep.self_loops;
      rep.c3 = false;
      rep.violations.push_back("self-loop at adversarial edge " + std::to_string(i));
    }
    if (a.pool.end > original.size() || a.pool.empty()) {
      rep.c3 = false;
      rep.violations.push_back("C3: adversarial edge " + std::to_string(i) + " has no valid pool");
    } else {
      const auto pool = pool_of(original, a.pool);
      const bool ok = pool.contains_source(e.u) && pool.contains_destination(e.v);
      if (!ok) {
        rep.c3 = false;
        rep.violations.push_back("C3: adversarial edge " + std::to_string(i) + " (" + std::to_string(e.u) + ", " +
                                 std::to_string(e.v) + ") lies outside its pool");
      }
    }
    ++counts[{a.batch, e.u}];
    if (e.v != e.u) ++counts[{a.batch, e.v}];
  }
  for (const auto& [key, c] : counts) {
    const auto cap = key.first < pset.per_batch_n.size() ? pset.per_batch_n[key.first] : 0;
    if (c > cap) {
      rep.c4 = false;
      rep.violations.push_back("C4: node " + std::to_string(key.second) + " has " + std::to_string(c) +
                               " adversarial edges in batch " + std::to_string(key.first) + " (N = " +
                               std::to_string(cap) + ")");
    }
  }
  return rep;
}

}  // namespace tgadv::attack
