#pragma once

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "tgadv/attack/assignment.hpp"
#include "tgadv/ctdg/graph.hpp"
#include "tgadv/tgnn/forward.hpp"
#include "tgadv/util/error.hpp"

namespace tgadv::attack {

/// A chosen adversarial endpoint pair and its cost.
struct SelectedPair {
  NodeId u = 0;
  NodeId v = 0;
  double cost = 0.0;

  friend auto operator==(const SelectedPair&, const SelectedPair&) -> bool = default;
};

/// Cheapest first; ties by (u, v).
inline auto by_cost(const SelectedPair& a, const SelectedPair& b) -> bool {
  return std::tie(a.cost, a.u, a.v) < std::tie(b.cost, b.u, b.v);
}

/// Edge scores between pool nodes at time t_ref. Bipartite pools give a
/// sources x destinations matrix; unipartite pools a symmetric square matrix
/// averaging both scorer orientations.
inline auto score_pool(const tgnn::TgnnModel& model, const tgnn::TemporalState& state, const NodePool& pool,
                       double t_ref) -> CostMatrix {
  if (pool.bipartite) {
    if (pool.sources.empty() || pool.destinations.empty()) throw InputError("score_pool: empty pool side");
  } else if (pool.sources.size() < 2) {
    throw InputError("score_pool: pool needs at least two nodes");
  }
  std::map<NodeId, Eigen::VectorXd> emb;
  for (NodeId n : pool.all()) emb.emplace(n, tgnn::embed(model, state, n, t_ref));
  const auto& rows = pool.sources;
  const auto& cols = pool.destinations;
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      if (pool.bipartite) {
        cost(ii, jj) = tgnn::score_edge(model, emb.at(rows[i]), emb.at(cols[j]));
      } else if (i == j) {
        cost(ii, jj) = 0.0;  // forbidden below
      } else if (j > i) {
        const double a = tgnn::score_edge(model, emb.at(rows[i]), emb.at(cols[j]));
        const double b = tgnn::score_edge(model, emb.at(cols[j]), emb.at(rows[i]));
        cost(ii, jj) = 0.5 * (a + b);
        cost(jj, ii) = cost(ii, jj);
      }
    }
  }
  return CostMatrix(rows, cols, std::move(cost));
}

/// Every feasible pair, unordered pairs collapsed for square pools.
inline auto feasible_pairs(const CostMatrix& c) -> std::vector<SelectedPair> {
  std::vector<SelectedPair> out;
  const bool square = c.square_pool();
  for (std::size_t i = 0; i < c.num_rows(); ++i) {
    for (std::size_t j = square ? i + 1 : 0; j < c.num_cols(); ++j) {
      if (!c.forbidden(i, j)) out.push_back({c.rows()[i], c.cols()[j], c(i, j)});
    }
  }
  return out;
}

/// argmin of the cost over all feasible pairs (naive per-timestamp rule).
inline auto naive_select(const CostMatrix& c) -> SelectedPair {
  const auto pairs = feasible_pairs(c);
  if (pairs.empty()) throw InputError("naive_select: empty pool");
  return *std::min_element(pairs.begin(), pairs.end(), by_cost);
}

/// The K cheapest feasible pairs.
inline auto low_k_select(const CostMatrix& c, std::size_t k) -> std::vector<SelectedPair> {
  auto pairs = feasible_pairs(c);
  if (k > pairs.size()) throw InputError("low_k_select: K exceeds the number of feasible pairs");
  std::partial_sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(k), pairs.end(), by_cost);
  pairs.resize(k);
  return pairs;
}

/// Maximum number of node-disjoint pairs a pool can form.
inline auto max_disjoint_pairs(const CostMatrix& c) -> std::size_t {
  return c.square_pool() ? c.num_rows() / 2 : std::min(c.num_rows(), c.num_cols());
}

struct HungarianPool {
  std::vector<SelectedPair> selected;            // K cheapest of the pooled rounds
  std::vector<std::vector<SelectedPair>> rounds;  // one matching per round
  std::size_t e_max = 0;
  std::size_t n = 0;
  bool shortfall = false;  // fewer than K pairs could be pooled
};

namespace detail {

/// One node-disjoint set of pairs for a square pool: solve the assignment,
/// read the permutation as undirected pairs, keep a cheapest disjoint subset,
/// and repeat on still-unmatched nodes until nothing new appears.
inline auto square_round(const CostMatrix& c) -> std::vector<std::pair<std::size_t, std::size_t>> {
  const auto n = c.num_rows();
  std::vector<char> matched(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> round;
  while (true) {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i) {
      if (!matched[i]) free.push_back(i);
    }
    if (free.size() < 2) break;
    const auto sub = c.restrict(free, free);
    const auto sol = solve_assignment_partial(sub);
    std::vector<std::tuple<double, NodeId, NodeId, std::size_t, std::size_t>> cand;
    for (const auto& [a, b] : sol.pairs) {
      const auto i = std::min(free[a], free[b]);
      const auto j = std::max(free[a], free[b]);
      cand.emplace_back(c(i, j), c.rows()[i], c.rows()[j], i, j);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    bool added = false;
    for (const auto& [cost, u, v, i, j] : cand) {
      if (matched[i] || matched[j]) continue;
      matched[i] = matched[j] = 1;
      round.emplace_back(i, j);
      added = true;
    }
    if (!added) break;
  }
  return round;
}

}  // namespace detail

/// Runs the assignment N = ceil(K / E_max) times, forbidding pairs chosen in
/// earlier rounds, and keeps the K cheapest pooled pairs. Each round is a
/// matching, so no node appears in more than N selected pairs.
inline auto hungarian_pool(CostMatrix c, std::size_t k) -> HungarianPool {
  if (k == 0) throw InputError("hungarian_pool: K must be >= 1");
  HungarianPool out;
  out.e_max = max_disjoint_pairs(c);
  if (out.e_max == 0) throw InputError("hungarian_pool: pool cannot form a pair");
  out.n = (k + out.e_max - 1) / out.e_max;
  const bool square = c.square_pool();
  std::vector<SelectedPair> pooled;
  for (std::size_t r = 0; r < out.n; ++r) {
    std::vector<std::pair<std::size_t, std::size_t>> picks;
    if (square) {
      picks = detail::square_round(c);
    } else {
      picks = solve_assignment_partial(c).pairs;
    }
    if (picks.empty()) break;
    std::vector<SelectedPair> round;
    for (const auto& [i, j] : picks) {
      round.push_back({c.rows()[i], c.cols()[j], c(i, j)});
      c.forbid(i, j);
      if (square) c.forbid(j, i);
    }
    std::sort(round.begin(), round.end(), by_cost);
    pooled.insert(pooled.end(), round.begin(), round.end());
    out.rounds.push_back(std::move(round));
  }
  std::sort(pooled.begin(), pooled.end(), by_cost);
  if (pooled.size() < k) {
    out.shortfall = true;
    spdlog::warn("hungarian_pool: only {} of {} pairs available after {} rounds", pooled.size(), k,
                 out.rounds.size());
  } else {
    pooled.resize(k);
  }
  out.selected = std::move(pooled);
  return out;
}

}  // namespace tgadv::attack
