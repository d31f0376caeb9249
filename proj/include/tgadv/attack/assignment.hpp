#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/util/error.hpp"

namespace tgadv::attack {

/// Edge-score costs between candidate endpoints.
///
/// Forbidden entries (self pairs, previously chosen pairs) hold `sentinel()`,
/// which stays strictly above every feasible cost.
class CostMatrix {
 public:
  static constexpr double kScoreSentinel = 2.0;

  CostMatrix() = default;

  CostMatrix(std::vector<NodeId> rows, std::vector<NodeId> cols, Eigen::MatrixXd cost)
      : rows_(std::move(rows)), cols_(std::move(cols)), cost_(std::move(cost)),
        forbidden_(static_cast<std::size_t>(cost_.size()), 0) {
    if (cost_.rows() != static_cast<Eigen::Index>(rows_.size()) ||
        cost_.cols() != static_cast<Eigen::Index>(cols_.size())) {
      throw InputError("cost matrix shape does not match its node lists");
    }
    for (Eigen::Index i = 0; i < cost_.size(); ++i) {
      if (!std::isfinite(cost_.data()[i])) throw InputError("cost matrix has non-finite entries");
    }
    const double top = cost_.size() > 0 ? cost_.maxCoeff() : 0.0;
    sentinel_ = top < kScoreSentinel ? kScoreSentinel : top + 1.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      for (std::size_t j = 0; j < cols_.size(); ++j) {
        if (rows_[i] == cols_[j]) forbid(i, j);
      }
    }
  }

  [[nodiscard]] auto rows() const -> const std::vector<NodeId>& { return rows_; }
  [[nodiscard]] auto cols() const -> const std::vector<NodeId>& { return cols_; }
  [[nodiscard]] auto num_rows() const -> std::size_t { return rows_.size(); }
  [[nodiscard]] auto num_cols() const -> std::size_t { return cols_.size(); }
  [[nodiscard]] auto sentinel() const -> double { return sentinel_; }
  [[nodiscard]] auto matrix() const -> const Eigen::MatrixXd& { return cost_; }

  [[nodiscard]] auto operator()(std::size_t i, std::size_t j) const -> double {
    return cost_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  [[nodiscard]] auto forbidden(std::size_t i, std::size_t j) const -> bool {
    return forbidden_[i * cols_.size() + j] != 0;
  }
  void forbid(std::size_t i, std::size_t j) {
    forbidden_[i * cols_.size() + j] = 1;
    cost_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sentinel_;
  }

  /// Same node lists on both sides (a unipartite pool).
  [[nodiscard]] auto square_pool() const -> bool { return rows_ == cols_; }

  [[nodiscard]] auto feasible_count() const -> std::size_t {
    return static_cast<std::size_t>(std::count(forbidden_.begin(), forbidden_.end(), 0));
  }

  /// The sub-matrix over the given row and column positions.
  [[nodiscard]] auto restrict(const std::vector<std::size_t>& ri, const std::vector<std::size_t>& ci) const
      -> CostMatrix {
    CostMatrix out;
    out.sentinel_ = sentinel_;
    out.cost_.resize(static_cast<Eigen::Index>(ri.size()), static_cast<Eigen::Index>(ci.size()));
    out.forbidden_.assign(ri.size() * ci.size(), 0);
    for (auto r : ri) out.rows_.push_back(rows_[r]);
    for (auto c : ci) out.cols_.push_back(cols_[c]);
    for (std::size_t a = 0; a < ri.size(); ++a) {
      for (std::size_t b = 0; b < ci.size(); ++b) {
        out.cost_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = (*this)(ri[a], ci[b]);
        out.forbidden_[a * ci.size() + b] = forbidden_[ri[a] * cols_.size() + ci[b]];
      }
    }
    return out;
  }

 private:
  std::vector<NodeId> rows_;
  std::vector<NodeId> cols_;
  Eigen::MatrixXd cost_;
  std::vector<char> forbidden_;
  double sentinel_ = kScoreSentinel;
};

/// A matching as (row position, column position) pairs plus its cost.
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

namespace detail {

/// Shortest-augmenting-path Hungarian algorithm with potentials for an
/// n x m matrix, n <= m. Returns the column assigned to each row.
inline auto hungarian_rows(const Eigen::MatrixXd& a) -> std::vector<std::size_t> {
  const auto n = static_cast<std::size_t>(a.rows());
  const auto m = static_cast<std::size_t>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is a virtual start.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0);
  std::vector<std::size_t> way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

/// Optimal min(rows, cols) matching that uses as few forbidden entries as
/// possible. Forbidden entries get a penalty larger than any achievable
/// spread of feasible totals, so the result is exact rather than heuristic.
inline auto solve_with_penalty(const CostMatrix& c) -> Assignment {
  const auto r = c.num_rows();
  const auto k = c.num_cols();
  if (r == 0 || k == 0) throw InputError("assignment needs at least one row and one column");
  double spread = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (!c.forbidden(i, j)) spread = std::max(spread, std::abs(c(i, j)));
    }
  }
  const double big = (2.0 * spread + 1.0) * static_cast<double>(std::min(r, k) + 1);
  const bool transpose = r > k;
  Eigen::MatrixXd a(transpose ? k : r, transpose ? r : k);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double x = c.forbidden(i, j) ? big : c(i, j);
      if (transpose) {
        a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = x;
      } else {
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
      }
    }
  }
  const auto rc = hungarian_rows(a);
  Assignment out;
  for (std::size_t x = 0; x < rc.size(); ++x) {
    const auto i = transpose ? rc[x] : x;
    const auto j = transpose ? x : rc[x];
    out.pairs.emplace_back(i, j);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [i, j] : out.pairs) out.total_cost += c.forbidden(i, j) ? 0.0 : c(i, j);
  return out;
}

}  // namespace detail

/// Minimum-cost matching of size min(rows, cols) avoiding forbidden pairs.
/// Throws InfeasibleError when no such matching exists.
inline auto solve_assignment(const CostMatrix& c) -> Assignment {
  auto a = detail::solve_with_penalty(c);
  for (const auto& [i, j] : a.pairs) {
    if (c.forbidden(i, j)) throw InfeasibleError("no full assignment avoids the forbidden pairs");
  }
  return a;
}

/// Maximum-cardinality feasible matching of minimum cost among those; never
/// returns forbidden pairs.
inline auto solve_assignment_partial(const CostMatrix& c) -> Assignment {
  auto a = detail::solve_with_penalty(c);
  std::erase_if(a.pairs, [&c](const auto& ij) { return c.forbidden(ij.first, ij.second); });
  return a;
}

}  // namespace tgadv::attack
