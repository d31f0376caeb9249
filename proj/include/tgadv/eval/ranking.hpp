#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/tgnn/forward.hpp"
#include "tgadv/util/error.hpp"
#include "tgadv/util/rng.hpp"

namespace tgadv::eval {

inline constexpr std::size_t kDefaultNegatives = 100;

/// Up to `count` distinct destinations drawn uniformly without replacement
/// from `pool`, never including `exclude`. When fewer than `count` candidates
/// exist every candidate is returned.
inline auto sample_negatives(std::span<const NodeId> pool, NodeId exclude, std::size_t count, Rng& rng)
    -> std::vector<NodeId> {
  const bool has_excluded = std::binary_search(pool.begin(), pool.end(), exclude);
  const auto available = pool.size() - (has_excluded ? 1 : 0);
  std::vector<NodeId> out;
  if (available <= count) {
    out.reserve(available);
    for (NodeId n : pool) {
      if (n != exclude) out.push_back(n);
    }
    return out;
  }
  // A uniform (count+1)-subset minus `exclude` (or minus a uniformly chosen
  // member when `exclude` is absent) is a uniform count-subset of the rest.
  std::vector<NodeId> draw;
  draw.reserve(count + 1);
  std::sample(pool.begin(), pool.end(), std::back_inserter(draw), count + 1, rng);
  auto it = std::find(draw.begin(), draw.end(), exclude);
  if (it == draw.end()) {
    std::uniform_int_distribution<std::size_t> pick(0, draw.size() - 1);
    it = draw.begin() + static_cast<std::ptrdiff_t>(pick(rng));
  }
  draw.erase(it);
  return draw;
}

/// Pessimistic rank: 1 + #{negatives scoring above or equal to the true edge}.
inline auto rank_from_scores(double positive, std::span<const double> negatives) -> double {
  std::size_t above = 0;
  for (double s : negatives) {
    if (s >= positive) ++above;
  }
  return 1.0 + static_cast<double>(above);
}

/// Rank of (u, v, t) against the given negative destinations under `state`.
inline auto rank_edge(const tgnn::TgnnModel& model, const tgnn::TemporalState& state,
                      const TemporalInteraction& edge, std::span<const NodeId> negatives) -> double {
  std::vector<NodeId> cands;
  cands.reserve(negatives.size() + 1);
  cands.push_back(edge.v);
  cands.insert(cands.end(), negatives.begin(), negatives.end());
  const auto scores = tgnn::score_candidates(model, state, edge.u, cands, edge.t);
  return rank_from_scores(scores.front(), std::span<const double>(scores).subspan(1));
}

/// Decides whether an edge is admitted into memory (and, optionally, into
/// the metric) during a streamed evaluation.
using EdgeFilter = std::function<bool(const tgnn::TgnnModel&, const tgnn::TemporalState&,
                                      const TemporalInteraction&)>;

struct StreamOptions {
  std::uint64_t seed = 0;
  std::size_t num_negatives = kDefaultNegatives;
  bool skip_adversarial = false;  // rank ground-truth edges only
  EdgeFilter filter;              // empty: every edge is admitted
  bool rank_kept_only = false;    // with a filter: rank only admitted edges
};

struct StreamResult {
  std::vector<double> ranks;
  std::vector<std::size_t> ranked_edges;
  std::size_t candidate_pool = 0;  // smallest negative count used
  std::size_t admitted = 0;
  std::size_t rejected = 0;
};

/// Ranks each edge in `range` against pre-edge memory and then lets it update
/// the state. Negatives for edge i are drawn from a stream seeded by
/// (seed, i), so they do not depend on which edges were ranked before.
inline auto evaluate_stream(const tgnn::TgnnModel& model, tgnn::TemporalState& state,
                            const DynamicGraph& g, IndexRange range, const StreamOptions& opts)
    -> StreamResult {
  StreamResult out;
  out.candidate_pool = opts.num_negatives;
  const auto& pool = g.destination_ids();
  for (auto i = range.begin; i < range.end; ++i) {
    const auto& e = g[i];
    const bool admitted = !opts.filter || opts.filter(model, state, e);
    const bool rank = !(opts.skip_adversarial && e.is_adversarial) && (admitted || !opts.rank_kept_only);
    if (rank) {
      Rng rng(derive_seed({opts.seed, static_cast<std::uint64_t>(i)}));
      const auto negs = sample_negatives(pool, e.v, opts.num_negatives, rng);
      out.candidate_pool = std::min(out.candidate_pool, negs.size());
      out.ranks.push_back(rank_edge(model, state, e, negs));
      out.ranked_edges.push_back(i);
    }
    if (admitted) {
      tgnn::observe(model, state, e);
      ++out.admitted;
    } else {
      ++out.rejected;
    }
  }
  return out;
}

/// 100 * mean reciprocal rank.
inline auto mrr_of(std::span<const double> ranks) -> double {
  if (ranks.empty()) throw InputError("mrr: empty edge list");
  double acc = 0.0;
  for (double r : ranks) acc += 1.0 / r;
  return 100.0 * acc / static_cast<double>(ranks.size());
}

/// 100 * fraction of ranks <= k.
inline auto hit_at_k_of(std::span<const double> ranks, std::size_t k = 10) -> double {
  if (ranks.empty()) throw InputError("hit_at_k: empty edge list");
  std::size_t hits = 0;
  for (double r : ranks) {
    if (r <= static_cast<double>(k)) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

}  // namespace tgadv::eval
