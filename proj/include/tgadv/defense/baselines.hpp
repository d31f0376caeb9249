#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <unordered_map>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/defense/tshield.hpp"
#include "tgadv/tgnn/forward.hpp"
#include "tgadv/tgnn/train.hpp"
#include "tgadv/util/error.hpp"

namespace tgadv::defense {

/// Low-rank reconstruction of the plain training graph. Unipartite graphs
/// use the symmetric adjacency (eigen-decomposition, ranked by |lambda|);
/// bipartite graphs use the source x destination biadjacency.
class LowRankAdjacency {
 public:
  LowRankAdjacency(const DynamicGraph& g, IndexRange edges, std::size_t rank) {
    if (rank < 1) throw InputError("svd rank must be at least 1");
    bipartite_ = g.bipartite();
    std::map<NodeId, Eigen::Index> rows;
    std::map<NodeId, Eigen::Index> cols;
    for (auto i = edges.begin; i < edges.end; ++i) {
      if (bipartite_) {
        rows.emplace(g[i].u, 0);
        cols.emplace(g[i].v, 0);
      } else {
        rows.emplace(g[i].u, 0);
        rows.emplace(g[i].v, 0);
      }
    }
    if (!bipartite_) cols = rows;
    if (rows.empty()) throw InputError("svd defense needs at least one training edge");
    Eigen::Index k = 0;
    for (auto& [n, idx] : rows) idx = k++;
    k = 0;
    for (auto& [n, idx] : cols) idx = k++;
    row_of_ = {rows.begin(), rows.end()};
    col_of_ = {cols.begin(), cols.end()};

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                              static_cast<Eigen::Index>(cols.size()));
    for (auto i = edges.begin; i < edges.end; ++i) {
      const auto r = row_of_.at(g[i].u);
      const auto c = col_of_.at(g[i].v);
      if (!bipartite_ && g[i].u == g[i].v) continue;
      a(r, c) = 1.0;
      if (!bipartite_) a(c, r) = 1.0;
    }
    if (!bipartite_) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
      if (es.info() != Eigen::Success) throw InputError("eigen-decomposition of the adjacency failed");
      const auto n = es.eigenvalues().size();
      std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
      std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
        return std::abs(es.eigenvalues()[x]) > std::abs(es.eigenvalues()[y]);
      });
      const auto r = std::min<Eigen::Index>(static_cast<Eigen::Index>(rank), n);
      approx_ = Eigen::MatrixXd::Zero(n, n);
      for (Eigen::Index j = 0; j < r; ++j) {
        const auto idx = order[static_cast<std::size_t>(j)];
        const Eigen::VectorXd v = es.eigenvectors().col(idx);
        approx_ += es.eigenvalues()[idx] * v * v.transpose();
      }
    } else {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
      if (svd.info() != Eigen::Success) throw InputError("singular value decomposition failed");
      const auto r = std::min<Eigen::Index>(static_cast<Eigen::Index>(rank), svd.singularValues().size());
      approx_ = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
                svd.matrixV().leftCols(r).transpose();
    }
  }

  /// Reconstructed entry; pairs outside the training graph are 0.
  [[nodiscard]] auto entry(NodeId u, NodeId v) const -> double {
    const auto r = row_of_.find(u);
    const auto c = col_of_.find(v);
    if (r == row_of_.end() || c == col_of_.end()) return 0.0;
    return approx_(r->second, c->second);
  }

  [[nodiscard]] auto matrix() const -> const Eigen::MatrixXd& { return approx_; }

 private:
  bool bipartite_ = false;
  std::unordered_map<NodeId, Eigen::Index> row_of_;
  std::unordered_map<NodeId, Eigen::Index> col_of_;
  Eigen::MatrixXd approx_;
};

/// Per-edge loss weights over `edges`: the reconstructed entry clamped to [0, 1].
inline auto tgnsvd_weights(const DynamicGraph& g, IndexRange edges, std::size_t rank)
    -> std::unordered_map<std::size_t, double> {
  const LowRankAdjacency lr(g, edges, rank);
  std::unordered_map<std::size_t, double> out;
  for (auto i = edges.begin; i < edges.end; ++i) out[i] = std::clamp(lr.entry(g[i].u, g[i].v), 0.0, 1.0);
  return out;
}

class SvdPolicy : public tgnn::TrainPolicy {
 public:
  SvdPolicy(const DynamicGraph& g, IndexRange train, std::size_t rank) : weights_(tgnsvd_weights(g, train, rank)) {}

  [[nodiscard]] auto edge_weight(std::size_t index) const -> double {
    const auto it = weights_.find(index);
    return it == weights_.end() ? 1.0 : it->second;
  }
  [[nodiscard]] auto weights() const -> const std::unordered_map<std::size_t, double>& { return weights_; }

 private:
  std::unordered_map<std::size_t, double> weights_;
};

/// cos(h_u(t), h_v(t)) against the given state, dropout off.
inline auto embedding_cosine(const TgnnModel& model, const TemporalState& state, const TemporalInteraction& e)
    -> double {
  const auto hu = tgnn::embed(model, state, e.u, e.t);
  const auto hv = tgnn::embed(model, state, e.v, e.t);
  const double nu = hu.norm();
  const double nv = hv.norm();
  return nu > 0.0 && nv > 0.0 ? hu.dot(hv) / (nu * nv) : 0.0;
}

/// Drops an edge iff the cosine of its endpoint embeddings is below tau_cosine.
inline auto tgncosine_keep(const TgnnModel& model, const TemporalState& state, const TemporalInteraction& e,
                           double tau_cosine) -> bool {
  return embedding_cosine(model, state, e) >= tau_cosine;
}

class CosinePolicy : public tgnn::TrainPolicy {
 public:
  static constexpr bool kFilters = true;

  explicit CosinePolicy(double tau_cosine) : tau_(tau_cosine) {}

  auto keep(std::size_t epoch, std::size_t index, const TgnnModel& model, const TemporalState& state,
            const TemporalInteraction& e) -> bool {
    const double c = embedding_cosine(model, state, e);
    const bool kept = c >= tau_;
    ledger_.add(epoch, index, c, kept);
    return kept;
  }

  void begin_epoch(std::size_t epoch, std::size_t /*epochs*/) { ledger_.set_threshold(epoch, tau_); }
  void end_epoch(std::size_t /*epoch*/, bool best) {
    if (best) ledger_.final_threshold = tau_;
  }

  [[nodiscard]] auto validation_filter(std::size_t /*epoch*/) const -> eval::EdgeFilter {
    const double tau = tau_;
    return [tau](const TgnnModel& m, const TemporalState& s, const TemporalInteraction& e) {
      return tgncosine_keep(m, s, e, tau);
    };
  }

  [[nodiscard]] auto ledger() const -> const FilterLedger& { return ledger_; }

 private:
  double tau_;
  FilterLedger ledger_;
};

/// Outcome of (possibly defended) training.
struct DefendedModel {
  tgnn::TrainResult train;
  DefenseConfig config;
  FilterLedger ledger;  // empty for non-filtering variants
  eval::EdgeFilter deployment_filter;  // empty for non-filtering variants
};

/// The filter a trained filtering defense applies at deployment.
inline auto make_deployment_filter(const DefenseConfig& cfg, double tau) -> eval::EdgeFilter {
  switch (cfg.variant) {
    case Variant::tshield:
    case Variant::tshield_f:
      return [tau](const TgnnModel& m, const TemporalState& s, const TemporalInteraction& e) {
        return tgnn::score_pair(m, s, e.u, e.v, e.t) >= tau;
      };
    case Variant::tgn_cosine: {
      const double tc = cfg.tau_cosine;
      return [tc](const TgnnModel& m, const TemporalState& s, const TemporalInteraction& e) {
        return tgncosine_keep(m, s, e, tc);
      };
    }
    case Variant::none:
    case Variant::tgn_svd: return {};
  }
  return {};
}

/// Trains the victim on `g` under the configured defense.
inline auto train_defended(const DynamicGraph& g, const SplitBundle& splits, const tgnn::TgnnHyper& hyper,
                           const tgnn::TrainConfig& train_cfg, const DefenseConfig& cfg) -> DefendedModel {
  cfg.check();
  DefendedModel out;
  out.config = cfg;
  const TgnnModel init(hyper);
  switch (cfg.variant) {
    case Variant::none: out.train = tgnn::train(init, g, splits, train_cfg); break;
    case Variant::tshield:
    case Variant::tshield_f: {
      ShieldPolicy p(cfg, train_cfg.epochs);
      out.train = tgnn::train(init, g, splits, train_cfg, p);
      out.ledger = p.ledger();
      out.deployment_filter = make_deployment_filter(cfg, out.ledger.final_threshold);
      break;
    }
    case Variant::tgn_svd: {
      SvdPolicy p(g, splits.train, cfg.svd_rank);
      out.train = tgnn::train(init, g, splits, train_cfg, p);
      break;
    }
    case Variant::tgn_cosine: {
      CosinePolicy p(cfg.tau_cosine);
      out.train = tgnn::train(init, g, splits, train_cfg, p);
      out.ledger = p.ledger();
      out.deployment_filter = make_deployment_filter(cfg, cfg.tau_cosine);
      break;
    }
  }
  return out;
}

}  // namespace tgadv::defense
