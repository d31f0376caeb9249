#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/ctdg/io.hpp"
#include "tgadv/eval/ranking.hpp"
#include "tgadv/tgnn/forward.hpp"
#include "tgadv/tgnn/train.hpp"
#include "tgadv/util/error.hpp"

namespace tgadv::defense {

using nn::Tape;
using nn::Var;
using tgnn::TgnnModel;
using tgnn::TemporalState;

/// Cosine-annealed filtering threshold from tau_start (epoch 0) to tau_end
/// (epoch total_epochs).
struct ThresholdSchedule {
  double tau_start = 0.0;
  double tau_end = 0.0;
  std::size_t total_epochs = 1;

  void check() const {
    if (!(tau_start >= 0.0 && tau_start <= tau_end && tau_end <= 1.0)) {
      throw InputError("threshold schedule needs 0 <= tau_start <= tau_end <= 1");
    }
    if (total_epochs == 0) throw InputError("threshold schedule needs at least one epoch");
  }
};

inline auto threshold_at(const ThresholdSchedule& s, std::size_t epoch) -> double {
  s.check();
  if (epoch > s.total_epochs) throw InputError("threshold_at: epoch beyond the schedule");
  const double x = std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(s.total_epochs);
  return s.tau_end + (s.tau_start - s.tau_end) * (1.0 + std::cos(x)) / 2.0;
}

enum class Variant { none, tshield, tshield_f, tgn_svd, tgn_cosine };

inline auto to_string(Variant v) -> std::string {
  switch (v) {
    case Variant::none: return "none";
    case Variant::tshield: return "tshield";
    case Variant::tshield_f: return "tshield_f";
    case Variant::tgn_svd: return "tgn_svd";
    case Variant::tgn_cosine: return "tgn_cosine";
  }
  return "?";
}

inline auto parse_variant(std::string_view s) -> Variant {
  if (s == "none") return Variant::none;
  if (s == "tshield") return Variant::tshield;
  if (s == "tshield_f") return Variant::tshield_f;
  if (s == "tgn_svd") return Variant::tgn_svd;
  if (s == "tgn_cosine") return Variant::tgn_cosine;
  throw InputError("unknown defense variant '" + std::string(s) + "'");
}

/// Variants that drop edges and therefore gate memory updates.
inline auto filters(Variant v) -> bool {
  return v == Variant::tshield || v == Variant::tshield_f || v == Variant::tgn_cosine;
}

struct DefenseConfig {
  Variant variant = Variant::tshield;
  double tau_start = 0.0;
  double tau_end = 0.1;
  double lambda = 1.0;
  double theta = 0.01;
  std::size_t svd_rank = 100;
  double tau_cosine = 0.1;

  /// The lambda actually applied (tshield_f forces 0).
  [[nodiscard]] auto effective_lambda() const -> double { return variant == Variant::tshield ? lambda : 0.0; }

  [[nodiscard]] auto schedule(std::size_t epochs) const -> ThresholdSchedule {
    return {tau_start, tau_end, epochs > 1 ? epochs - 1 : 1};
  }

  void check() const {
    ThresholdSchedule{tau_start, tau_end, 1}.check();
    if (!(lambda >= 0.0)) throw InputError("lambda must be non-negative");
    if (!(theta > 0.0)) throw InputError("theta must be positive");
    if (svd_rank < 1) throw InputError("svd_rank must be at least 1");
    if (!(tau_cosine >= -1.0 && tau_cosine <= 1.0)) throw InputError("tau_cosine must lie in [-1, 1]");
  }
};

/// Per-epoch filtering decisions over training edges.
struct LedgerRow {
  std::size_t epoch = 0;
  std::size_t edge_index = 0;
  double score = 0.0;
  bool kept = true;

  friend auto operator==(const LedgerRow&, const LedgerRow&) -> bool = default;
};

class FilterLedger {
 public:
  void add(std::size_t epoch, std::size_t edge, double score, bool kept) { rows_.push_back({epoch, edge, score, kept}); }
  void set_threshold(std::size_t epoch, double tau) {
    if (taus_.size() <= epoch) taus_.resize(epoch + 1, 0.0);
    taus_[epoch] = tau;
  }

  [[nodiscard]] auto rows() const -> const std::vector<LedgerRow>& { return rows_; }
  [[nodiscard]] auto thresholds() const -> const std::vector<double>& { return taus_; }
  [[nodiscard]] auto empty() const -> bool { return rows_.empty(); }
  [[nodiscard]] auto last_epoch() const -> std::size_t {
    if (rows_.empty()) throw InputError("filter ledger is empty");
    return rows_.back().epoch;
  }
  [[nodiscard]] auto epoch_rows(std::size_t epoch) const -> std::vector<LedgerRow> {
    std::vector<LedgerRow> out;
    for (const auto& r : rows_) {
      if (r.epoch == epoch) out.push_back(r);
    }
    return out;
  }
  /// Threshold of the epoch that produced the returned model.
  double final_threshold = 0.0;

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write ledger '" + path.string() + "'");
    out << "epoch,edge_index,score,kept\n";
    for (const auto& r : rows_) {
      out << r.epoch << ',' << r.edge_index << ',' << detail::format_double(r.score) << ',' << (r.kept ? 1 : 0)
          << '\n';
    }
    if (!out) throw InputError("failed writing ledger '" + path.string() + "'");
  }

  static auto load_csv(const std::filesystem::path& path) -> FilterLedger {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open ledger '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "epoch,edge_index,score,kept") {
      throw InputError("ledger '" + path.string() + "' has an unexpected header");
    }
    FilterLedger led;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string a;
      std::string b;
      std::string c;
      std::string d;
      if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') ||
          !std::getline(ss, d)) {
        throw InputError("ledger line " + std::to_string(lineno) + " is malformed");
      }
      try {
        led.add(std::stoull(a), std::stoull(b), std::stod(c), d == "1");
      } catch (const std::exception&) {
        throw InputError("ledger line " + std::to_string(lineno) + " is malformed");
      }
    }
    return led;
  }

 private:
  std::vector<LedgerRow> rows_;
  std::vector<double> taus_;
};

/// Filtering partition of one batch at threshold tau: kept iff score >= tau.
struct FilterResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
  std::vector<double> scores;  // per batch edge, in order
};

/// Scores each edge against the pre-batch state (dropout off) and splits
/// the batch. Memory is not touched.
inline auto filter_batch(const TgnnModel& model, const TemporalState& state, const DynamicGraph& g, IndexRange batch,
                         double tau) -> FilterResult {
  FilterResult out;
  for (auto i = batch.begin; i < batch.end; ++i) {
    const auto& e = g[i];
    const double s = tgnn::score_pair(model, state, e.u, e.v, e.t);
    out.scores.push_back(s);
    (s >= tau ? out.kept : out.dropped).push_back(i);
  }
  return out;
}

/// Embedding of node i at its previous kept interaction.
struct SmoothnessCache {
  struct Entry {
    Eigen::VectorXd h;
    double t = 0.0;
  };
  std::unordered_map<NodeId, Entry> last;

  void clear() { last.clear(); }
};

struct EndpointEmbedding {
  NodeId node = 0;
  double t = 0.0;
  Var h;
};

/// exp(-theta * dt).
inline auto smoothness_weight(double dt, double theta) -> double { return std::exp(-theta * dt); }

/// L_tmp = -sum_i w(t - t_i^-) cos(h_i(t), h_i(t_i^-)) over endpoints. A
/// batch is scored against pre-batch state, so every lookup uses the cache
/// as it stood before the batch; cached embeddings enter as constants.
/// Afterwards each node's entry becomes its last embedding in the batch.
/// Nodes without a prior entry contribute nothing.
inline auto temporal_smoothness_loss(Tape& tp, std::span<const EndpointEmbedding> items, SmoothnessCache& cache,
                                     double theta) -> Var {
  std::vector<Var> terms;
  for (const auto& it : items) {
    const auto found = cache.last.find(it.node);
    if (found == cache.last.end()) continue;
    const double w = smoothness_weight(it.t - found->second.t, theta);
    terms.push_back(tp.scale(tp.cosine(it.h, tp.constant(found->second.h)), -w));
  }
  for (const auto& it : items) cache.last[it.node] = {tp.value(it.h), it.t};
  if (terms.empty()) return tp.constant(Eigen::VectorXd::Zero(1));
  return tp.sum(terms);
}

/// T-Shield training hooks: scheduled score filtering plus the temporal
/// smoothness term scaled by lambda / |kept batch|.
class ShieldPolicy : public tgnn::TrainPolicy {
 public:
  static constexpr bool kFilters = true;

  ShieldPolicy(DefenseConfig cfg, std::size_t epochs) : cfg_(cfg), schedule_(cfg.schedule(epochs)) {
    cfg_.check();
    if (cfg_.variant != Variant::tshield && cfg_.variant != Variant::tshield_f) {
      throw InputError("ShieldPolicy requires the tshield or tshield_f variant");
    }
  }

  void begin_epoch(std::size_t epoch, std::size_t /*epochs*/) {
    tau_ = threshold_at(schedule_, std::min(epoch, schedule_.total_epochs));
    ledger_.set_threshold(epoch, tau_);
    cache_.clear();
  }

  auto keep(std::size_t epoch, std::size_t index, const TgnnModel& model, const TemporalState& state,
            const TemporalInteraction& e) -> bool {
    const double s = tgnn::score_pair(model, state, e.u, e.v, e.t);
    const bool kept = s >= tau_;
    ledger_.add(epoch, index, s, kept);
    return kept;
  }

  auto extra_loss(Tape& tp, std::span<const tgnn::KeptEdge> kept, const DynamicGraph& g) -> Var {
    const double lambda = cfg_.effective_lambda();
    if (lambda == 0.0 || kept.empty()) return {};
    std::vector<EndpointEmbedding> items;
    items.reserve(2 * kept.size());
    for (const auto& k : kept) {
      const auto& e = g[k.index];
      items.push_back({e.u, e.t, k.hu});
      items.push_back({e.v, e.t, k.hv});
    }
    const Var l = temporal_smoothness_loss(tp, items, cache_, cfg_.theta);
    return tp.scale(l, lambda / static_cast<double>(kept.size()));
  }

  [[nodiscard]] auto validation_filter(std::size_t /*epoch*/) const -> eval::EdgeFilter {
    const double tau = tau_;
    return [tau](const TgnnModel& m, const TemporalState& s, const TemporalInteraction& e) {
      return tgnn::score_pair(m, s, e.u, e.v, e.t) >= tau;
    };
  }

  void end_epoch(std::size_t /*epoch*/, bool best) {
    if (best) ledger_.final_threshold = tau_;
  }

  [[nodiscard]] auto ledger() const -> const FilterLedger& { return ledger_; }
  [[nodiscard]] auto threshold() const -> double { return tau_; }

 private:
  DefenseConfig cfg_;
  ThresholdSchedule schedule_;
  FilterLedger ledger_;
  SmoothnessCache cache_;
  double tau_ = 0.0;
};

/// Scores (pre-filter) and labels from the ledger's final epoch.
struct ScoredEdge {
  double score = 0.0;
  bool adversarial = false;
};

inline auto classify_adversarial(const FilterLedger& ledger, const DynamicGraph& g) -> std::vector<ScoredEdge> {
  if (ledger.empty()) throw InputError("classify_adversarial: empty ledger");
  std::vector<ScoredEdge> out;
  for (const auto& r : ledger.epoch_rows(ledger.last_epoch())) {
    if (r.edge_index >= g.size()) throw InputError("ledger edge index outside the graph");
    out.push_back({r.score, g[r.edge_index].is_adversarial});
  }
  return out;
}

}  // namespace tgadv::defense
