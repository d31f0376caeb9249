#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/nn/tape.hpp"
#include "tgadv/util/error.hpp"

namespace tgadv::tgnn {

using nn::Index;
using nn::Mat;
using nn::Vec;

/// Per-node memory s_u and last-interaction time t_u^-.
///
/// Alongside the current memory the bank keeps the inputs of each node's
/// most recent update, so a training step can re-run that update on a tape
/// and push gradients into the updater and time encoder.
class NodeMemoryBank {
 public:
  NodeMemoryBank() = default;

  NodeMemoryBank(NodeId num_nodes, Index memory_dim, Index edge_dim, double origin = 0.0)
      : memory_dim_(memory_dim), edge_dim_(edge_dim) {
    const auto n = static_cast<Index>(num_nodes);
    memory_ = Mat::Zero(memory_dim, n);
    prev_memory_ = Mat::Zero(memory_dim, n);
    partner_memory_ = Mat::Zero(memory_dim, n);
    prev_features_ = Mat::Zero(edge_dim, n);
    reset(origin);
  }

  /// Zero memories; every node's last update becomes `origin`.
  void reset(double origin = 0.0) {
    memory_.setZero();
    prev_memory_.setZero();
    partner_memory_.setZero();
    prev_features_.setZero();
    last_update_.assign(static_cast<std::size_t>(memory_.cols()), origin);
    prev_dt_.assign(static_cast<std::size_t>(memory_.cols()), 0.0);
    has_update_.assign(static_cast<std::size_t>(memory_.cols()), 0);
    origin_ = origin;
  }

  [[nodiscard]] auto num_nodes() const -> NodeId { return static_cast<NodeId>(memory_.cols()); }
  [[nodiscard]] auto memory_dim() const -> Index { return memory_dim_; }
  [[nodiscard]] auto edge_dim() const -> Index { return edge_dim_; }
  [[nodiscard]] auto origin() const -> double { return origin_; }

  [[nodiscard]] auto memory(NodeId u) const -> Eigen::Ref<const Vec> { return memory_.col(check(u)); }
  [[nodiscard]] auto last_update(NodeId u) const -> double {
    return last_update_[static_cast<std::size_t>(check(u))];
  }
  [[nodiscard]] auto memory_matrix() const -> const Mat& { return memory_; }
  [[nodiscard]] auto last_updates() const -> const std::vector<double>& { return last_update_; }

  [[nodiscard]] auto has_update(NodeId u) const -> bool {
    return has_update_[static_cast<std::size_t>(check(u))] != 0;
  }
  [[nodiscard]] auto previous_memory(NodeId u) const -> Eigen::Ref<const Vec> {
    return prev_memory_.col(check(u));
  }
  [[nodiscard]] auto partner_memory(NodeId u) const -> Eigen::Ref<const Vec> {
    return partner_memory_.col(check(u));
  }
  [[nodiscard]] auto previous_dt(NodeId u) const -> double {
    return prev_dt_[static_cast<std::size_t>(check(u))];
  }
  [[nodiscard]] auto previous_features(NodeId u) const -> Eigen::Ref<const Vec> {
    return prev_features_.col(check(u));
  }

  /// Stores a new memory for `u` together with the update inputs.
  void commit(NodeId u, const Vec& new_memory, const Vec& old_memory, const Vec& partner,
              double dt, const Vec& features, double t) {
    const auto c = check(u);
    const auto i = static_cast<std::size_t>(c);
    if (t < last_update_[i]) throw InputError("memory update would move last_update backwards");
    prev_memory_.col(c) = old_memory;
    partner_memory_.col(c) = partner;
    if (edge_dim_ > 0) prev_features_.col(c) = features;
    prev_dt_[i] = dt;
    has_update_[i] = 1;
    memory_.col(c) = new_memory;
    last_update_[i] = t;
  }

  friend auto operator==(const NodeMemoryBank& a, const NodeMemoryBank& b) -> bool {
    return a.memory_ == b.memory_ && a.last_update_ == b.last_update_ &&
           a.prev_memory_ == b.prev_memory_ && a.partner_memory_ == b.partner_memory_ &&
           a.prev_features_ == b.prev_features_ && a.prev_dt_ == b.prev_dt_ &&
           a.has_update_ == b.has_update_;
  }

 private:
  [[nodiscard]] auto check(NodeId u) const -> Index {
    if (u < 0 || u >= memory_.cols()) throw InputError("node id out of range");
    return static_cast<Index>(u);
  }

  Index memory_dim_ = 0;
  Index edge_dim_ = 0;
  double origin_ = 0.0;
  Mat memory_;
  Mat prev_memory_;
  Mat partner_memory_;
  Mat prev_features_;
  std::vector<double> last_update_;
  std::vector<double> prev_dt_;
  std::vector<char> has_update_;
};

/// A temporal neighbor: the other endpoint, the interaction time and its
/// edge features (nullptr when unattributed).
struct NeighborEntry {
  NodeId node = 0;
  double t = 0.0;
  const Vec* features = nullptr;
};

/// Chronological adjacency lists; entries are appended as events are observed.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  explicit NeighborIndex(NodeId num_nodes) : adj_(static_cast<std::size_t>(num_nodes)) {}

  void clear() {
    for (auto& a : adj_) a.clear();
  }

  void insert(const TemporalInteraction& e) {
    const Vec* f = e.has_features() ? &e.features : nullptr;
    adj_.at(static_cast<std::size_t>(e.u)).push_back({e.v, e.t, f});
    if (e.u != e.v) adj_.at(static_cast<std::size_t>(e.v)).push_back({e.u, e.t, f});
  }

  /// The `count` most recent neighbors of u, oldest first.
  [[nodiscard]] auto recent(NodeId u, std::size_t count) const -> std::span<const NeighborEntry> {
    const auto& a = adj_.at(static_cast<std::size_t>(u));
    const auto n = std::min(count, a.size());
    return {a.data() + (a.size() - n), n};
  }

  [[nodiscard]] auto degree(NodeId u) const -> std::size_t {
    return adj_.at(static_cast<std::size_t>(u)).size();
  }

 private:
  std::vector<std::vector<NeighborEntry>> adj_;
};

/// Everything that evolves while an interaction stream is consumed.
struct TemporalState {
  NodeMemoryBank bank;
  NeighborIndex neighbors;

  TemporalState() = default;
  TemporalState(NodeId num_nodes, Index memory_dim, Index edge_dim, double origin = 0.0)
      : bank(num_nodes, memory_dim, edge_dim, origin), neighbors(num_nodes) {}

  void reset(double origin) {
    bank.reset(origin);
    neighbors.clear();
  }
};

}  // namespace tgadv::tgnn
