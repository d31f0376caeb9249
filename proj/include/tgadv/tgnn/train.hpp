#pragma once

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/eval/ranking.hpp"
#include "tgadv/nn/adam.hpp"
#include "tgadv/tgnn/forward.hpp"
#include "tgadv/util/error.hpp"
#include "tgadv/util/rng.hpp"

namespace tgadv::tgnn {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 600;
  std::size_t epochs = 100;
  std::size_t patience = 10;
  std::uint64_t negative_seed = 0;
  std::size_t eval_negatives = eval::kDefaultNegatives;
  bool validate = true;

  void check() const {
    if (!(learning_rate > 0.0) || batch_size == 0 || epochs == 0 || patience == 0) {
      throw InputError("training config values must be positive");
    }
  }
};

/// Memory origin for a graph: every node starts with t_u^- at the first event.
inline auto time_origin(const DynamicGraph& g) -> double { return g.empty() ? 0.0 : g[0].t; }

inline auto fresh_state(const TgnnModel& model, const DynamicGraph& g) -> TemporalState {
  return {g.num_nodes(), model.hyper().memory_dim, model.hyper().edge_dim, time_origin(g)};
}

/// One negative destination per edge, uniform over destination ids, never
/// the true destination.
inline auto draw_negative(const std::vector<NodeId>& destinations, NodeId v, Rng& rng) -> NodeId {
  if (destinations.size() < 2) throw InputError("negative sampling needs at least two destinations");
  std::uniform_int_distribution<std::size_t> pick(0, destinations.size() - 1);
  while (true) {
    const NodeId n = destinations[pick(rng)];
    if (n != v) return n;
  }
}

/// A training edge that survived filtering, with its tape embeddings.
struct KeptEdge {
  std::size_t index = 0;
  Var hu;
  Var hv;
};

/// Default hooks; defenses derive and hide the members they customize.
struct TrainPolicy {
  static constexpr bool kFilters = false;

  void begin_epoch(std::size_t /*epoch*/, std::size_t /*epochs*/) {}
  auto keep(std::size_t /*epoch*/, std::size_t /*index*/, const TgnnModel&, const TemporalState&,
            const TemporalInteraction&) -> bool {
    return true;
  }
  [[nodiscard]] auto edge_weight(std::size_t /*index*/) const -> double { return 1.0; }
  /// Additional loss term, already scaled; an invalid Var means none.
  auto extra_loss(Tape&, std::span<const KeptEdge>, const DynamicGraph&) -> Var { return {}; }
  void after_batch(const Tape&, std::span<const KeptEdge>, const DynamicGraph&) {}
  [[nodiscard]] auto validation_filter(std::size_t /*epoch*/) const -> eval::EdgeFilter { return {}; }
  void end_epoch(std::size_t /*epoch*/, bool /*best*/) {}
};

struct TrainResult {
  TgnnModel model;
  std::vector<double> validation_mrr;
  std::vector<double> train_loss;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double best_mrr = -1.0;
};

/// Mean link loss over edges with per-edge weights; `terms` receives each
/// unweighted term when non-null.
inline auto batch_link_loss(Tape& tp, std::span<const Var> pos, std::span<const Var> neg,
                            std::span<const double> weights, std::vector<Var>* terms = nullptr) -> Var {
  if (pos.empty()) throw InputError("link_loss: empty batch");
  std::vector<Var> parts;
  parts.reserve(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    Var term = tp.add(tp.neg_log_clamped(pos[i], kScoreEps), tp.neg_log1m_clamped(neg[i], kScoreEps));
    if (terms != nullptr) terms->push_back(term);
    if (!weights.empty() && weights[i] != 1.0) term = tp.scale(term, weights[i]);
    parts.push_back(term);
  }
  return tp.scale(tp.sum(parts), 1.0 / static_cast<double>(pos.size()));
}

/// Link loss of a batch scored against `state` (stored memory, dropout off).
inline auto link_loss(const TgnnModel& model, const TemporalState& state, const DynamicGraph& g,
                      IndexRange batch, std::span<const NodeId> negatives) -> double {
  if (batch.empty()) throw InputError("link_loss: empty batch");
  if (negatives.size() != batch.size()) throw InputError("link_loss: one negative per edge required");
  Tape tp(false);
  auto& m = detail::mut(model);
  MemoryView mem(tp, m, state.bank, false);
  EmbedContext ctx{tp, m, mem, state.neighbors, nullptr};
  std::vector<Var> pos;
  std::vector<Var> neg;
  for (auto i = batch.begin; i < batch.end; ++i) {
    const auto& e = g[i];
    const Var hu = embed(ctx, e.u, e.t);
    pos.push_back(score_var(tp, m, hu, embed(ctx, e.v, e.t)));
    neg.push_back(score_var(tp, m, hu, embed(ctx, negatives[i - batch.begin], e.t)));
  }
  return tp.scalar(batch_link_loss(tp, pos, neg, {}));
}

/// Trains on the train range of `g` with per-batch negative sampling and
/// validation-MRR early stopping. Within a batch every edge is scored against
/// pre-batch memory; the batch then updates memory in edge order.
template <class Policy = TrainPolicy>
auto train(TgnnModel model, const DynamicGraph& g, const SplitBundle& splits, const TrainConfig& cfg,
           Policy& policy) -> TrainResult {
  cfg.check();
  if (splits.train.empty()) throw InputError("train split is empty");
  if (model.hyper().edge_dim != g.edge_dim()) throw InputError("model edge_dim does not match the graph");

  nn::Adam opt(model.parameters(), cfg.learning_rate);
  Rng dropout_rng(derive_seed({cfg.negative_seed, 0x64726f70ULL}));
  const auto& destinations = g.destination_ids();
  const auto batches = batch_iter(splits.train, cfg.batch_size);
  const bool validate = cfg.validate && !splits.validation.empty();
  const auto val_seed = derive_seed({cfg.negative_seed, 0x76616cULL});

  TrainResult result;
  TgnnModel best = model;
  std::size_t since_best = 0;
  TemporalState state = fresh_state(model, g);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    state.reset(time_origin(g));
    policy.begin_epoch(epoch, cfg.epochs);
    Rng neg_rng(derive_seed({cfg.negative_seed, 0x6e6567ULL, epoch}));
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    for (const auto& batch : batches) {
      std::vector<NodeId> negatives;
      negatives.reserve(batch.size());
      for (auto i = batch.begin; i < batch.end; ++i) negatives.push_back(draw_negative(destinations, g[i].v, neg_rng));

      std::vector<std::size_t> kept;
      kept.reserve(batch.size());
      for (auto i = batch.begin; i < batch.end; ++i) {
        if constexpr (Policy::kFilters) {
          if (!policy.keep(epoch, i, model, state, g[i])) continue;
        }
        kept.push_back(i);
      }
      if (!kept.empty()) {
        Tape tp(true);
        MemoryView mem(tp, model, state.bank, true);
        EmbedContext ctx{tp, model, mem, state.neighbors, &dropout_rng};
        std::vector<Var> pos;
        std::vector<Var> neg;
        std::vector<double> weights;
        std::vector<KeptEdge> records;
        for (auto i : kept) {
          const auto& e = g[i];
          const Var hu = embed(ctx, e.u, e.t);
          const Var hv = embed(ctx, e.v, e.t);
          const Var hn = embed(ctx, negatives[i - batch.begin], e.t);
          pos.push_back(score_var(tp, model, hu, hv));
          neg.push_back(score_var(tp, model, hu, hn));
          weights.push_back(policy.edge_weight(i));
          records.push_back({i, hu, hv});
        }
        Var loss = batch_link_loss(tp, pos, neg, weights);
        const double link = tp.scalar(loss);
        if (const Var extra = policy.extra_loss(tp, records, g); extra.valid()) loss = tp.add(loss, extra);
        const double value = tp.scalar(loss);
        if (!std::isfinite(value)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at edge " +
                                std::to_string(batch.begin) + " (link term " + std::to_string(link) + ")");
        }
        opt.zero_grad();
        tp.backward(loss);
        opt.step();
        policy.after_batch(tp, records, g);
        loss_sum += value;
        ++loss_count;
      }
      for (auto i : kept) observe(model, state, g[i]);
    }
    result.train_loss.push_back(loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0);
    result.epochs_run = epoch + 1;

    if (!validate) {
      policy.end_epoch(epoch, true);
      best = model;
      result.best_epoch = epoch;
      continue;
    }
    TemporalState vstate = state;
    eval::StreamOptions vopts;
    vopts.seed = val_seed;
    vopts.num_negatives = cfg.eval_negatives;
    vopts.filter = policy.validation_filter(epoch);
    vopts.rank_kept_only = static_cast<bool>(vopts.filter);
    const auto vres = eval::evaluate_stream(model, vstate, g, splits.validation, vopts);
    const double mrr = vres.ranks.empty() ? 0.0 : eval::mrr_of(vres.ranks);
    result.validation_mrr.push_back(mrr);
    spdlog::debug("epoch {}: loss {:.5f}, validation MRR {:.3f}", epoch, result.train_loss.back(), mrr);
    const bool improved = mrr > result.best_mrr;
    policy.end_epoch(epoch, improved);
    if (improved) {
      result.best_mrr = mrr;
      result.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (2 * (epoch + 1) >= cfg.epochs && since_best >= cfg.patience) break;
  }
  result.model = std::move(best);
  return result;
}

inline auto train(TgnnModel model, const DynamicGraph& g, const SplitBundle& splits, const TrainConfig& cfg)
    -> TrainResult {
  TrainPolicy plain;
  return train(std::move(model), g, splits, cfg, plain);
}

}  // namespace tgadv::tgnn
