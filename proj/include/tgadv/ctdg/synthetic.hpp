#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/util/error.hpp"
#include "tgadv/util/rng.hpp"

namespace tgadv {

/// Bipartite community-recurrence process. Sources are split into
/// communities, each owning a block of destinations; every source revisits
/// a small preferred set inside its block and occasionally explores.
struct SyntheticSpec {
  NodeId sources = 100;
  NodeId destinations = 20;
  std::size_t edges = 2000;
  std::size_t communities = 4;
  std::size_t preferred = 3;  // preferred destinations per source
  double revisit = 0.85;      // probability of drawing from the preferred set
  double rate = 1.0;          // per-source event rate
  Eigen::Index edge_dim = 8;  // 0: unattributed
  double feature_noise = 0.5;
  double time_scale = 1000.0;  // multiplies every timestamp
  std::uint64_t seed = 0;

  void check() const {
    if (sources < 1 || destinations < 1) throw InputError("synthetic graph needs sources and destinations");
    if (edges < 1) throw InputError("synthetic graph needs at least one edge");
    if (communities < 1 || static_cast<std::size_t>(destinations) < communities) {
      throw InputError("synthetic graph needs at least one destination per community");
    }
    const auto block = static_cast<std::size_t>(destinations) / communities;
    if (preferred < 1 || preferred > block) throw InputError("preferred set must fit inside a community block");
    if (!(revisit >= 0.0 && revisit <= 1.0)) throw InputError("revisit probability must lie in [0, 1]");
    if (!(rate > 0.0)) throw InputError("event rate must be positive");
    if (edge_dim < 0) throw InputError("edge_dim must be non-negative");
    if (!(feature_noise >= 0.0)) throw InputError("feature noise must be non-negative");
    if (!(time_scale > 0.0)) throw InputError("time scale must be positive");
  }
};

/// Sources take ids [0, sources); destinations [sources, sources + destinations).
inline auto generate_synthetic(const SyntheticSpec& spec) -> DynamicGraph {
  spec.check();
  Rng rng(derive_seed({spec.seed, 0x73796e74ULL}));
  const auto n_src = static_cast<std::size_t>(spec.sources);
  const auto n_dst = static_cast<std::size_t>(spec.destinations);
  const auto block = n_dst / spec.communities;

  std::vector<std::vector<NodeId>> preferred(n_src);
  for (std::size_t s = 0; s < n_src; ++s) {
    const auto c = s % spec.communities;
    std::vector<NodeId> members;
    for (std::size_t j = 0; j < block; ++j) members.push_back(spec.sources + static_cast<NodeId>(c * block + j));
    std::shuffle(members.begin(), members.end(), rng);
    members.resize(spec.preferred);
    std::sort(members.begin(), members.end());
    preferred[s] = std::move(members);
  }
  // Features describe the destination: a per-destination center plus noise.
  std::vector<Eigen::VectorXd> centers(n_dst);
  std::normal_distribution<double> z(0.0, 1.0);
  for (auto& c : centers) {
    c.resize(spec.edge_dim);
    for (Eigen::Index j = 0; j < spec.edge_dim; ++j) c[j] = z(rng);
  }

  // Superposed per-source Poisson processes.
  std::exponential_distribution<double> gap(spec.rate * static_cast<double>(n_src));
  std::uniform_int_distribution<std::size_t> pick_src(0, n_src - 1);
  std::uniform_int_distribution<std::size_t> pick_pref(0, spec.preferred - 1);
  std::uniform_int_distribution<std::size_t> pick_any(0, n_dst - 1);
  std::bernoulli_distribution revisit(spec.revisit);
  std::vector<TemporalInteraction> out;
  out.reserve(spec.edges);
  double t = 0.0;
  for (std::size_t i = 0; i < spec.edges; ++i) {
    t += gap(rng);
    const auto s = pick_src(rng);
    TemporalInteraction e;
    e.u = static_cast<NodeId>(s);
    e.v = revisit(rng) ? preferred[s][pick_pref(rng)] : spec.sources + static_cast<NodeId>(pick_any(rng));
    e.t = t * spec.time_scale;
    if (spec.edge_dim > 0) {
      e.features = centers[static_cast<std::size_t>(e.v - spec.sources)];
      for (Eigen::Index j = 0; j < spec.edge_dim; ++j) e.features[j] += spec.feature_noise * z(rng);
    }
    out.push_back(std::move(e));
  }
  return DynamicGraph(std::move(out), true, spec.sources + spec.destinations);
}

}  // namespace tgadv
