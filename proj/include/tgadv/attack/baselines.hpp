#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tgadv/attack/assignment.hpp"
#include "tgadv/ctdg/graph.hpp"
#include "tgadv/util/error.hpp"

namespace tgadv::attack {

enum class BaselineKind { random, pa, jaccard, struct_d, struct_pr };

inline auto to_string(BaselineKind k) -> std::string {
  switch (k) {
    case BaselineKind::random: return "random";
    case BaselineKind::pa: return "pa";
    case BaselineKind::jaccard: return "jaccard";
    case BaselineKind::struct_d: return "struct_d";
    case BaselineKind::struct_pr: return "struct_pr";
  }
  return "?";
}

inline auto parse_baseline(std::string_view s) -> BaselineKind {
  if (s == "random") return BaselineKind::random;
  if (s == "pa") return BaselineKind::pa;
  if (s == "jaccard") return BaselineKind::jaccard;
  if (s == "struct_d") return BaselineKind::struct_d;
  if (s == "struct_pr") return BaselineKind::struct_pr;
  throw InputError("unknown baseline attack '" + std::string(s) + "'");
}

/// Undirected simple graph accumulated from interactions (timestamps and
/// multiplicities dropped).
class PlainGraph {
 public:
  explicit PlainGraph(NodeId num_nodes) : adj_(static_cast<std::size_t>(num_nodes)) {}

  void add(NodeId u, NodeId v) {
    if (u == v) return;
    adj_.at(static_cast<std::size_t>(u)).insert(v);
    adj_.at(static_cast<std::size_t>(v)).insert(u);
  }

  void add_range(const DynamicGraph& g, IndexRange r) {
    for (auto i = r.begin; i < r.end; ++i) add(g[i].u, g[i].v);
  }

  [[nodiscard]] auto num_nodes() const -> NodeId { return static_cast<NodeId>(adj_.size()); }
  [[nodiscard]] auto neighbors(NodeId u) const -> const std::set<NodeId>& {
    return adj_.at(static_cast<std::size_t>(u));
  }
  [[nodiscard]] auto degree(NodeId u) const -> double { return static_cast<double>(neighbors(u).size()); }

  [[nodiscard]] auto jaccard(NodeId u, NodeId v) const -> double {
    const auto& a = neighbors(u);
    const auto& b = neighbors(v);
    std::size_t common = 0;
    for (NodeId x : a) common += b.count(x);
    const auto uni = a.size() + b.size() - common;
    return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
  }

  /// Power-iteration PageRank; dangling mass is spread uniformly.
  [[nodiscard]] auto pagerank(double damping = 0.85, double tol = 1e-10, int max_iter = 10000) const
      -> std::vector<double> {
    const auto n = adj_.size();
    if (n == 0) return {};
    const double base = (1.0 - damping) / static_cast<double>(n);
    std::vector<double> pr(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (int it = 0; it < max_iter; ++it) {
      double dangling = 0.0;
      for (std::size_t u = 0; u < n; ++u) {
        if (adj_[u].empty()) dangling += pr[u];
      }
      std::fill(next.begin(), next.end(), base + damping * dangling / static_cast<double>(n));
      for (std::size_t u = 0; u < n; ++u) {
        if (adj_[u].empty()) continue;
        const double share = damping * pr[u] / static_cast<double>(adj_[u].size());
        for (NodeId v : adj_[u]) next[static_cast<std::size_t>(v)] += share;
      }
      double diff = 0.0;
      for (std::size_t u = 0; u < n; ++u) diff += std::abs(next[u] - pr[u]);
      pr.swap(next);
      if (diff < tol) break;
    }
    return pr;
  }

 private:
  std::vector<std::set<NodeId>> adj_;
};

/// Cost matrix over the pool from a plain-graph statistic (lower = chosen first).
inline auto statistic_costs(const PlainGraph& pg, const NodePool& pool, BaselineKind kind) -> CostMatrix {
  if (kind == BaselineKind::random) throw InputError("random baseline has no cost matrix");
  if (kind == BaselineKind::jaccard && pool.bipartite) {
    throw InputError("jaccard baseline cannot be applied to bipartite graphs");
  }
  std::vector<double> pr;
  if (kind == BaselineKind::struct_pr) pr = pg.pagerank();
  const auto& rows = pool.sources;
  const auto& cols = pool.destinations;
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const NodeId u = rows[i];
      const NodeId v = cols[j];
      double x = 0.0;
      switch (kind) {
        case BaselineKind::pa: x = pg.degree(u) * pg.degree(v); break;
        case BaselineKind::jaccard: x = pg.jaccard(u, v); break;
        case BaselineKind::struct_d: x = pg.degree(u) + pg.degree(v); break;
        case BaselineKind::struct_pr:
          x = pr[static_cast<std::size_t>(u)] + pr[static_cast<std::size_t>(v)];
          break;
        case BaselineKind::random: break;
      }
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
    }
  }
  return CostMatrix(rows, cols, std::move(cost));
}

}  // namespace tgadv::attack
