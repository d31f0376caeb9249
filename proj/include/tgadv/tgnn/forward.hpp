#pragma once

#include <cmath>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "tgadv/nn/tape.hpp"
#include "tgadv/tgnn/model.hpp"
#include "tgadv/tgnn/state.hpp"
#include "tgadv/util/error.hpp"
#include "tgadv/util/rng.hpp"

namespace tgadv::tgnn {

using nn::Tape;
using nn::Var;

inline constexpr double kScoreEps = 1e-7;

namespace detail {

// Inference runs the tape code with recording off, which never touches
// gradients; the cast only satisfies the Param& signatures.
inline auto mut(const TgnnModel& m) -> TgnnModel& { return const_cast<TgnnModel&>(m); }

inline void check_edge_dim(const NodeMemoryBank& bank, const Vec& e) {
  if (e.size() != bank.edge_dim()) throw InputError("edge feature width does not match the model");
}

}  // namespace detail

/// Phi(dt) on the tape.
inline auto time_var(Tape& tp, TgnnModel& m, double dt) -> Var {
  if (!(dt >= 0.0)) throw InputError("encode_time: negative time interval");
  auto& te = m.time_encoder();
  return tp.cos(tp.add(tp.scale(tp.param(te.omega), dt), tp.param(te.phi)));
}

/// s' = (1 - z) * s + z * c.
inline auto gru_step(Tape& tp, TgnnModel& m, Var s, Var msg) -> Var {
  auto& g = m.gru();
  const Var z = tp.sigmoid(tp.add(tp.matvec(g.w_z, msg), tp.affine(g.u_z, g.b_z, s)));
  const Var r = tp.sigmoid(tp.add(tp.matvec(g.w_r, msg), tp.affine(g.u_r, g.b_r, s)));
  const Var c = tp.tanh(tp.add(tp.matvec(g.w_c, msg), tp.affine(g.u_c, g.b_c, tp.mul(r, s))));
  return tp.add(tp.mul(tp.one_minus(z), s), tp.mul(z, c));
}

/// [s_self || s_other || Phi(dt) || e] on the tape.
inline auto message_var(Tape& tp, TgnnModel& m, Var self, Var other, double dt, const Vec& e) -> Var {
  const Var te = time_var(tp, m, dt);
  if (e.size() == 0) return tp.concat({self, other, te});
  return tp.concat({self, other, te, tp.constant(e)});
}

/// m_u(t) = [s_u(t-) || s_v(t-) || Phi(t - t_u-) || e_uv].
inline auto compute_message(const TgnnModel& model, const NodeMemoryBank& bank, NodeId u, NodeId v,
                            double t, const Vec& e = Vec()) -> Vec {
  if (t < bank.last_update(u)) throw InputError("out-of-order event for node " + std::to_string(u));
  detail::check_edge_dim(bank, e);
  Tape tp(false);
  auto& m = detail::mut(model);
  const Var msg = message_var(tp, m, tp.constant(bank.memory(u)), tp.constant(bank.memory(v)),
                              t - bank.last_update(u), e);
  return tp.value(msg);
}

/// Applies the GRU update to both endpoints from their pre-event memories.
inline void update_memory(const TgnnModel& model, NodeMemoryBank& bank, NodeId u, NodeId v, double t,
                          const Vec& e = Vec()) {
  if (t < bank.last_update(u) || t < bank.last_update(v)) {
    throw InputError("out-of-order event (" + std::to_string(u) + ", " + std::to_string(v) + ")");
  }
  detail::check_edge_dim(bank, e);
  auto& m = detail::mut(model);
  const Vec su = bank.memory(u);
  const Vec sv = bank.memory(v);
  const double du = t - bank.last_update(u);
  const double dv = t - bank.last_update(v);
  Tape tp(false);
  const Var vu = tp.constant(su);
  const Var vv = tp.constant(sv);
  const Vec new_u = tp.value(gru_step(tp, m, vu, message_var(tp, m, vu, vv, du, e)));
  if (u == v) {
    bank.commit(u, new_u, su, sv, du, e, t);
    return;
  }
  const Vec new_v = tp.value(gru_step(tp, m, vv, message_var(tp, m, vv, vu, dv, e)));
  bank.commit(u, new_u, su, sv, du, e, t);
  bank.commit(v, new_v, sv, su, dv, e, t);
}

inline void update_memory(const TgnnModel& model, NodeMemoryBank& bank, const TemporalInteraction& e) {
  update_memory(model, bank, e.u, e.v, e.t, e.features);
}

/// Memory update plus neighbor insertion for one observed event.
inline void observe(const TgnnModel& model, TemporalState& state, const TemporalInteraction& e) {
  update_memory(model, state.bank, e);
  state.neighbors.insert(e);
}

/// Node memories as tape variables, one per node per tape.
///
/// With `recompute` set, a node that has been updated re-runs its most recent
/// GRU step on the tape so the loss reaches the updater and time encoder;
/// otherwise the stored memory enters as a constant.
class MemoryView {
 public:
  MemoryView(Tape& tape, TgnnModel& model, const NodeMemoryBank& bank, bool recompute)
      : tape_(tape), model_(model), bank_(bank), recompute_(recompute) {}

  auto get(NodeId u) -> Var {
    if (auto it = cache_.find(u); it != cache_.end()) return it->second;
    Var out;
    if (recompute_ && bank_.has_update(u)) {
      const Var prev = tape_.constant(bank_.previous_memory(u));
      const Var partner = tape_.constant(bank_.partner_memory(u));
      const Vec feats = bank_.edge_dim() > 0 ? Vec(bank_.previous_features(u)) : Vec();
      out = gru_step(tape_, model_, prev,
                     message_var(tape_, model_, prev, partner, bank_.previous_dt(u), feats));
    } else {
      out = tape_.constant(bank_.memory(u));
    }
    cache_.emplace(u, out);
    return out;
  }

  [[nodiscard]] auto bank() const -> const NodeMemoryBank& { return bank_; }

 private:
  Tape& tape_;
  TgnnModel& model_;
  const NodeMemoryBank& bank_;
  bool recompute_;
  std::unordered_map<NodeId, Var> cache_;
};

/// Inputs shared by every embedding computed on one tape.
struct EmbedContext {
  Tape& tape;
  TgnnModel& model;
  MemoryView& memory;
  const NeighborIndex& neighbors;
  Rng* dropout_rng = nullptr;  // null: dropout off
};

/// h_u(t): multi-head attention of [s_u || Phi(0)] over the most recent
/// neighbors, merged with the query features by the output projection.
inline auto embed(EmbedContext& ctx, NodeId u, double t) -> Var {
  Tape& tp = ctx.tape;
  TgnnModel& m = ctx.model;
  const auto& hp = m.hyper();
  auto& attn = m.attention();
  const Var su = ctx.memory.get(u);
  const Var query_feat = tp.concat({su, time_var(tp, m, 0.0)});
  const auto hd = hp.head_dim();
  const auto nbrs = ctx.neighbors.recent(u, hp.neighbors);

  Var agg;
  if (nbrs.empty()) {
    agg = tp.constant(Vec::Zero(hp.heads * hd));
  } else {
    const Var q = tp.matvec(attn.w_q, query_feat);
    std::vector<Var> keys;
    std::vector<Var> values;
    keys.reserve(nbrs.size());
    values.reserve(nbrs.size());
    for (const auto& nb : nbrs) {
      if (nb.t > t) throw InputError("neighbor interaction lies after the query time");
      const Var sv = ctx.memory.get(nb.node);
      const Var te = time_var(tp, m, t - nb.t);
      Var kv_feat;
      if (hp.edge_dim > 0) {
        const Vec e = nb.features ? *nb.features : Vec::Zero(hp.edge_dim);
        kv_feat = tp.concat({sv, tp.constant(e), te});
      } else {
        kv_feat = tp.concat({sv, te});
      }
      keys.push_back(tp.matvec(attn.w_k, kv_feat));
      values.push_back(tp.matvec(attn.w_v, kv_feat));
    }
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(hp.heads));
    std::vector<Var> logits(nbrs.size());
    std::vector<Var> head_values(nbrs.size());
    for (Index h = 0; h < hp.heads; ++h) {
      const Var qh = tp.slice(q, h * hd, hd);
      for (std::size_t j = 0; j < nbrs.size(); ++j) {
        logits[j] = tp.dot(qh, tp.slice(keys[j], h * hd, hd));
        head_values[j] = tp.slice(values[j], h * hd, hd);
      }
      Var w = tp.softmax(tp.scale(tp.concat(std::span<const Var>(logits)), inv_sqrt));
      if (ctx.dropout_rng != nullptr && hp.dropout > 0.0) {
        std::bernoulli_distribution keep(1.0 - hp.dropout);
        Vec mask(static_cast<Index>(nbrs.size()));
        for (Index j = 0; j < mask.size(); ++j) {
          mask[j] = keep(*ctx.dropout_rng) ? 1.0 / (1.0 - hp.dropout) : 0.0;
        }
        w = tp.mul(w, mask);
      }
      heads.push_back(tp.weighted_sum(w, head_values));
    }
    agg = tp.concat(std::span<const Var>(heads));
  }
  return tp.affine(attn.w_o, attn.b_o, tp.concat({agg, query_feat}));
}

/// sigma(w2 . relu(W1 [h_u || h_v] + b1) + b2) as a 1-vector.
inline auto score_var(Tape& tp, TgnnModel& m, Var hu, Var hv) -> Var {
  auto& c = m.scorer();
  return tp.sigmoid(tp.affine(c.w2, c.b2, tp.relu(tp.affine(c.w1, c.b1, tp.concat({hu, hv})))));
}

/// Plain embedding from stored memory, dropout off.
inline auto embed(const TgnnModel& model, const TemporalState& state, NodeId u, double t) -> Vec {
  Tape tp(false);
  auto& m = detail::mut(model);
  MemoryView mem(tp, m, state.bank, false);
  EmbedContext ctx{tp, m, mem, state.neighbors, nullptr};
  return tp.value(embed(ctx, u, t));
}

inline auto score_edge(const TgnnModel& model, const Vec& hu, const Vec& hv) -> double {
  const auto d = model.hyper().memory_dim;
  if (hu.size() != d || hv.size() != d) throw InputError("score_edge: embedding dimension mismatch");
  Tape tp(false);
  return tp.scalar(score_var(tp, detail::mut(model), tp.constant(hu), tp.constant(hv)));
}

/// y_hat for (u, v) at time t against the current state.
inline auto score_pair(const TgnnModel& model, const TemporalState& state, NodeId u, NodeId v,
                       double t) -> double {
  Tape tp(false);
  auto& m = detail::mut(model);
  MemoryView mem(tp, m, state.bank, false);
  EmbedContext ctx{tp, m, mem, state.neighbors, nullptr};
  const Var hu = embed(ctx, u, t);
  const Var hv = embed(ctx, v, t);
  return tp.scalar(score_var(tp, m, hu, hv));
}

/// Scores of (u, c, t) for each candidate destination c; h_u is computed once.
inline auto score_candidates(const TgnnModel& model, const TemporalState& state, NodeId u,
                             std::span<const NodeId> candidates, double t) -> std::vector<double> {
  Tape tp(false);
  auto& m = detail::mut(model);
  MemoryView mem(tp, m, state.bank, false);
  EmbedContext ctx{tp, m, mem, state.neighbors, nullptr};
  const Var hu = embed(ctx, u, t);
  std::vector<double> out;
  out.reserve(candidates.size());
  for (NodeId c : candidates) out.push_back(tp.scalar(score_var(tp, m, hu, embed(ctx, c, t))));
  return out;
}

/// Replays events into the state without touching parameters.
inline void warm_replay(const TgnnModel& model, TemporalState& state,
                        std::span<const TemporalInteraction> edges) {
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i].t < edges[i - 1].t) throw InputError("warm_replay: edges are not chronological");
  }
  for (const auto& e : edges) observe(model, state, e);
}

inline void warm_replay(const TgnnModel& model, TemporalState& state, const DynamicGraph& g,
                        IndexRange range) {
  warm_replay(model, state,
              std::span<const TemporalInteraction>(g.interactions().data() + range.begin, range.size()));
}

}  // namespace tgadv::tgnn
