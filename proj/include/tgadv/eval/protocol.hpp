#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/eval/ranking.hpp"
#include "tgadv/tgnn/forward.hpp"
#include "tgadv/tgnn/train.hpp"
#include "tgadv/util/error.hpp"

namespace tgadv::eval {

/// Probability that a random genuine edge outscores a random adversarial
/// one, ties counting one half. Input pairs are (score, is_adversarial).
inline auto auroc(std::span<const std::pair<double, bool>> pairs) -> double {
  std::vector<std::pair<double, bool>> v(pairs.begin(), pairs.end());
  std::size_t n_adv = 0;
  for (const auto& p : v) {
    if (!std::isfinite(p.first)) throw InputError("auroc: non-finite score");
    n_adv += p.second ? 1 : 0;
  }
  const auto n_gen = v.size() - n_adv;
  if (n_adv == 0 || n_gen == 0) throw InputError("auroc needs both genuine and adversarial edges");
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Mann-Whitney: sum of midranks of the genuine group.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j].first == v[i].first) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (auto k = i; k < j; ++k) {
      if (!v[k].second) rank_sum += mid;
    }
    i = j;
  }
  const double g = static_cast<double>(n_gen);
  const double a = static_cast<double>(n_adv);
  return (rank_sum - g * (g + 1.0) / 2.0) / (g * a);
}

enum class Split { validation, test };

inline auto to_string(Split s) -> std::string { return s == Split::validation ? "validation" : "test"; }

struct MetricsReport {
  double mrr = 0.0;
  double hit10 = 0.0;
  std::optional<double> auroc;
  std::size_t num_evaluated = 0;
  std::size_t candidate_pool = 0;
  Split split = Split::test;
  std::uint64_t seed = 0;
};

struct ProtocolReport {
  MetricsReport validation;
  MetricsReport test;
};

struct ProtocolOptions {
  std::uint64_t seed = 0;
  std::size_t num_negatives = kDefaultNegatives;
  std::size_t hit_k = 10;
  EdgeFilter filter;  // set for filtering defenses
};

inline auto to_report(const StreamResult& r, Split split, std::uint64_t seed, std::size_t k) -> MetricsReport {
  MetricsReport m;
  m.split = split;
  m.seed = seed;
  m.num_evaluated = r.ranks.size();
  m.candidate_pool = r.candidate_pool;
  if (!r.ranks.empty()) {
    m.mrr = mrr_of(r.ranks);
    m.hit10 = hit_at_k_of(r.ranks, k);
  }
  return m;
}

/// Validation ranks every edge, adversarial ones included (only admitted
/// edges under a filtering defense); test ranks ground-truth edges only.
/// Memory consumes every edge the deployed model admits, adversarial ones
/// included.
inline auto evaluate_protocol(const tgnn::TgnnModel& model, const DynamicGraph& g, const SplitBundle& splits,
                              const ProtocolOptions& opts) -> ProtocolReport {
  if (splits.validation.empty() && splits.test.empty()) throw InputError("evaluation needs validation or test edges");
  auto state = tgnn::fresh_state(model, g);
  for (auto i = splits.train.begin; i < splits.train.end; ++i) {
    if (!opts.filter || opts.filter(model, state, g[i])) tgnn::observe(model, state, g[i]);
  }
  ProtocolReport out;
  StreamOptions v;
  v.seed = derive_seed({opts.seed, 0x76616cULL});
  v.num_negatives = opts.num_negatives;
  v.filter = opts.filter;
  v.rank_kept_only = static_cast<bool>(opts.filter);
  out.validation = to_report(evaluate_stream(model, state, g, splits.validation, v), Split::validation, opts.seed,
                             opts.hit_k);
  StreamOptions t;
  t.seed = derive_seed({opts.seed, 0x74657374ULL});
  t.num_negatives = opts.num_negatives;
  t.filter = opts.filter;
  t.skip_adversarial = true;
  t.rank_kept_only = false;
  out.test = to_report(evaluate_stream(model, state, g, splits.test, t), Split::test, opts.seed, opts.hit_k);
  return out;
}

}  // namespace tgadv::eval
