#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "tgadv/util/error.hpp"

namespace tgadv {

using NodeId = std::int64_t;

/// One dyadic event (u, v, t) with optional edge features.
struct TemporalInteraction {
  NodeId u = 0;
  NodeId v = 0;
  double t = 0.0;
  Eigen::VectorXd features;  // empty when the graph is unattributed
  bool is_adversarial = false;

  [[nodiscard]] auto has_features() const -> bool { return features.size() > 0; }
};

/// Half-open index range [begin, end) into a graph's interaction list.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] auto size() const -> std::size_t { return end - begin; }
  [[nodiscard]] auto empty() const -> bool { return begin == end; }
  [[nodiscard]] auto contains(std::size_t i) const -> bool { return i >= begin && i < end; }
  friend auto operator==(const IndexRange&, const IndexRange&) -> bool = default;
};

/// A chronologically ordered interaction sequence.
///
/// Interactions are kept sorted by timestamp; equal timestamps keep their
/// ingestion order. For bipartite graphs sources and destinations live in one
/// shared id space but form disjoint sets.
class DynamicGraph {
 public:
  DynamicGraph() = default;

  /// Builds a graph, stably sorting `interactions` by time.
  DynamicGraph(std::vector<TemporalInteraction> interactions, bool bipartite,
               NodeId num_nodes = -1)
      : interactions_(std::move(interactions)), bipartite_(bipartite) {
    std::stable_sort(interactions_.begin(), interactions_.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    NodeId max_id = -1;
    std::set<NodeId> src;
    std::set<NodeId> dst;
    for (const auto& e : interactions_) {
      if (e.u < 0 || e.v < 0) throw InputError("negative node id");
      if (!(e.t >= 0.0) || !std::isfinite(e.t)) throw InputError("negative or non-finite timestamp");
      if (e.features.size() != interactions_.front().features.size()) {
        throw InputError("ragged edge features");
      }
      max_id = std::max({max_id, e.u, e.v});
      src.insert(e.u);
      dst.insert(e.v);
    }
    num_nodes_ = std::max(num_nodes, max_id + 1);
    edge_dim_ = interactions_.empty() ? 0 : interactions_.front().features.size();
    if (bipartite_) {
      sources_.assign(src.begin(), src.end());
      destinations_.assign(dst.begin(), dst.end());
    } else {
      std::set<NodeId> all(src);
      all.insert(dst.begin(), dst.end());
      sources_.assign(all.begin(), all.end());
      destinations_ = sources_;
    }
  }

  [[nodiscard]] auto interactions() const -> const std::vector<TemporalInteraction>& {
    return interactions_;
  }
  [[nodiscard]] auto operator[](std::size_t i) const -> const TemporalInteraction& {
    return interactions_[i];
  }
  [[nodiscard]] auto size() const -> std::size_t { return interactions_.size(); }
  [[nodiscard]] auto empty() const -> bool { return interactions_.empty(); }
  [[nodiscard]] auto num_nodes() const -> NodeId { return num_nodes_; }
  [[nodiscard]] auto bipartite() const -> bool { return bipartite_; }
  [[nodiscard]] auto edge_dim() const -> Eigen::Index { return edge_dim_; }
  /// Sorted source ids; equals destination_ids() for unipartite graphs.
  [[nodiscard]] auto source_ids() const -> const std::vector<NodeId>& { return sources_; }
  [[nodiscard]] auto destination_ids() const -> const std::vector<NodeId>& { return destinations_; }

  [[nodiscard]] auto adversarial_count() const -> std::size_t {
    return static_cast<std::size_t>(std::count_if(
        interactions_.begin(), interactions_.end(), [](const auto& e) { return e.is_adversarial; }));
  }

  [[nodiscard]] auto timestamps() const -> std::vector<double> {
    std::vector<double> ts;
    ts.reserve(interactions_.size());
    for (const auto& e : interactions_) ts.push_back(e.t);
    return ts;
  }

  /// The graph with adversarial interactions removed.
  [[nodiscard]] auto genuine() const -> DynamicGraph {
    std::vector<TemporalInteraction> kept;
    kept.reserve(interactions_.size());
    for (const auto& e : interactions_) {
      if (!e.is_adversarial) kept.push_back(e);
    }
    return DynamicGraph(std::move(kept), bipartite_, num_nodes_);
  }

 private:
  std::vector<TemporalInteraction> interactions_;
  bool bipartite_ = false;
  NodeId num_nodes_ = 0;
  Eigen::Index edge_dim_ = 0;
  std::vector<NodeId> sources_;
  std::vector<NodeId> destinations_;
};

/// Chronological train / validation / test ranges.
struct SplitBundle {
  IndexRange train;
  IndexRange validation;
  IndexRange test;
};

/// Splits by index: floor(f0*|E|), floor(f1*|E|), remainder.
inline auto chronological_split(const DynamicGraph& g,
                                std::array<double, 3> fractions = {0.70, 0.15, 0.15})
    -> SplitBundle {
  const auto n = g.size();
  if (n < 3) throw InputError("chronological_split needs at least 3 interactions");
  for (double f : fractions) {
    if (!(f > 0.0)) throw InputError("split fractions must be positive");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw InputError("split fractions must sum to 1");
  }
  // The epsilon absorbs products such as 0.7 * 30 = 20.999999999999996.
  auto take = [n](double f) {
    return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
  };
  const auto n_train = take(fractions[0]);
  const auto n_val = take(fractions[1]);
  return {{0, n_train}, {n_train, n_train + n_val}, {n_train + n_val, n}};
}

/// Contiguous batches of `batch_size`; the last one may be short.
inline auto batch_iter(std::size_t num_edges, std::size_t batch_size) -> std::vector<IndexRange> {
  if (batch_size == 0) throw InputError("batch size must be >= 1");
  std::vector<IndexRange> out;
  for (std::size_t b = 0; b < num_edges; b += batch_size) {
    out.push_back({b, std::min(num_edges, b + batch_size)});
  }
  return out;
}

inline auto batch_iter(const DynamicGraph& g, std::size_t batch_size) -> std::vector<IndexRange> {
  return batch_iter(g.size(), batch_size);
}

inline auto batch_iter(IndexRange range, std::size_t batch_size) -> std::vector<IndexRange> {
  auto local = batch_iter(range.size(), batch_size);
  for (auto& r : local) {
    r.begin += range.begin;
    r.end += range.begin;
  }
  return local;
}

/// Endpoint pools of a set of interactions. For unipartite graphs both pools
/// hold the same (merged) node set.
struct NodePool {
  std::vector<NodeId> sources;
  std::vector<NodeId> destinations;
  bool bipartite = false;

  /// All distinct nodes, sorted.
  [[nodiscard]] auto all() const -> std::vector<NodeId> {
    std::vector<NodeId> out;
    std::set_union(sources.begin(), sources.end(), destinations.begin(), destinations.end(),
                   std::back_inserter(out));
    return out;
  }
  [[nodiscard]] auto contains_source(NodeId n) const -> bool {
    return std::binary_search(sources.begin(), sources.end(), n);
  }
  [[nodiscard]] auto contains_destination(NodeId n) const -> bool {
    return std::binary_search(destinations.begin(), destinations.end(), n);
  }
};

inline auto pool_of(const DynamicGraph& g, IndexRange range) -> NodePool {
  std::set<NodeId> src;
  std::set<NodeId> dst;
  for (auto i = range.begin; i < range.end; ++i) {
    src.insert(g[i].u);
    dst.insert(g[i].v);
  }
  NodePool pool;
  pool.bipartite = g.bipartite();
  if (g.bipartite()) {
    pool.sources.assign(src.begin(), src.end());
    pool.destinations.assign(dst.begin(), dst.end());
  } else {
    src.insert(dst.begin(), dst.end());
    pool.sources.assign(src.begin(), src.end());
    pool.destinations = pool.sources;
  }
  return pool;
}

/// V_{i,W}: endpoints of edges max(0, i-W+1) .. i.
inline auto window_nodes(const DynamicGraph& g, std::size_t i, std::size_t window) -> NodePool {
  if (i >= g.size()) throw InputError("window_nodes: edge index out of range");
  if (window == 0) return NodePool{{}, {}, g.bipartite()};
  const auto first = i + 1 >= window ? i + 1 - window : 0;
  return pool_of(g, {first, i + 1});
}

}  // namespace tgadv
