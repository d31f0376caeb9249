#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tgadv/attack/baselines.hpp"
#include "tgadv/attack/tspear.hpp"
#include "tgadv/ctdg/io.hpp"
#include "tgadv/ctdg/synthetic.hpp"
#include "tgadv/defense/tshield.hpp"
#include "tgadv/tgnn/model.hpp"
#include "tgadv/tgnn/train.hpp"
#include "tgadv/util/kv.hpp"

namespace tgadv::pipeline {

/// "none", "tspear", or one of the baseline attack names.
struct AttackBlock {
  std::string kind = "none";
  attack::AttackConfig config;

  [[nodiscard]] auto enabled() const -> bool { return kind != "none"; }
  [[nodiscard]] auto is_tspear() const -> bool { return kind == "tspear"; }
};

struct EvalBlock {
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::size_t hit_k = 10;
  std::size_t negatives = eval::kDefaultNegatives;
};

/// Everything a run needs. Defaults follow the reference training setup
/// (lr 1e-4, batch 600, dims 100, W 1200, theta 0.01).
struct ExperimentConfig {
  std::optional<std::filesystem::path> data_path;  // unset: synthetic graph
  ColumnMapping columns;
  bool columns_given = false;  // false: use the file's sidecar
  SyntheticSpec synthetic;
  AttackBlock attack;
  defense::DefenseConfig defense{.variant = defense::Variant::none};
  tgnn::TgnnHyper model;
  tgnn::TrainConfig train;
  EvalBlock eval;
  std::filesystem::path output_dir = "runs/default";
  bool overwrite = false;

  void check() const {
    if (data_path && !std::filesystem::exists(*data_path)) throw InputError("missing file: " + data_path->string());
    if (!data_path) synthetic.check();
    if (eval.seeds.empty()) throw InputError("eval.seeds must list at least one seed");
    if (eval.hit_k == 0 || eval.negatives == 0) throw InputError("eval.k and eval.negatives must be positive");
    if (attack.enabled()) {
      if (!attack.is_tspear()) attack::parse_baseline(attack.kind);
      attack.config.check();
    }
    defense.check();
    train.check();
    if (model.memory_dim < 1 || model.time_dim < 1 || model.heads < 1 || model.memory_dim % model.heads != 0) {
      throw InputError("model.memory_dim must be a positive multiple of model.heads");
    }
    if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw InputError("model.dropout must lie in [0, 1)");
  }

  [[nodiscard]] auto to_key_values() const -> KeyValues;
  static auto from_key_values(const KeyValues& kv) -> ExperimentConfig;
};

/// Shortest text that reads back to the same double.
inline auto format_number(double x) -> std::string {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw InputError("cannot format number");
  return {buf.data(), end};
}

inline auto join_seeds(const std::vector<std::uint64_t>& seeds) -> std::string {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? "," : "") + std::to_string(seeds[i]);
  return out;
}

inline auto parse_seeds(const std::string& s) -> std::vector<std::uint64_t> {
  std::vector<std::uint64_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto v = parse_int(item);
    if (v < 0) throw InputError("seeds must be non-negative: '" + item + "'");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

namespace detail {

/// Reads and writes one config field as text.
struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

inline auto count(const std::string& s) -> std::size_t {
  const auto v = parse_int(s);
  if (v < 0) throw InputError("expected a non-negative count: '" + s + "'");
  return static_cast<std::size_t>(v);
}

#define TGADV_NUM(member) \
  {[](const ExperimentConfig& c) { return format_number(c.member); }, \
   [](ExperimentConfig& c, const std::string& s) { c.member = parse_double(s); }}
#define TGADV_COUNT(member) \
  {[](const ExperimentConfig& c) { return std::to_string(c.member); }, \
   [](ExperimentConfig& c, const std::string& s) { c.member = static_cast<decltype(c.member)>(count(s)); }}
#define TGADV_BOOL(member) \
  {[](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }, \
   [](ExperimentConfig& c, const std::string& s) { c.member = parse_bool(s); }}

inline auto fields() -> const std::map<std::string, Field>& {
  static const std::map<std::string, Field> table = {
      {"data.path",
       {[](const ExperimentConfig& c) { return c.data_path ? c.data_path->string() : std::string(); },
        [](ExperimentConfig& c, const std::string& s) {
          c.data_path = s.empty() ? std::nullopt : std::optional<std::filesystem::path>(s);
        }}},
      {"synthetic.sources", TGADV_COUNT(synthetic.sources)},
      {"synthetic.destinations", TGADV_COUNT(synthetic.destinations)},
      {"synthetic.edges", TGADV_COUNT(synthetic.edges)},
      {"synthetic.communities", TGADV_COUNT(synthetic.communities)},
      {"synthetic.preferred", TGADV_COUNT(synthetic.preferred)},
      {"synthetic.revisit", TGADV_NUM(synthetic.revisit)},
      {"synthetic.rate", TGADV_NUM(synthetic.rate)},
      {"synthetic.edge_dim", TGADV_COUNT(synthetic.edge_dim)},
      {"synthetic.feature_noise", TGADV_NUM(synthetic.feature_noise)},
      {"synthetic.time_scale", TGADV_NUM(synthetic.time_scale)},
      {"synthetic.seed", TGADV_COUNT(synthetic.seed)},
      {"attack.kind",
       {[](const ExperimentConfig& c) { return c.attack.kind; },
        [](ExperimentConfig& c, const std::string& s) { c.attack.kind = s; }}},
      {"attack.p", TGADV_NUM(attack.config.p)},
      {"attack.window", TGADV_COUNT(attack.config.window)},
      {"attack.selection",
       {[](const ExperimentConfig& c) { return attack::to_string(c.attack.config.selection); },
        [](ExperimentConfig& c, const std::string& s) { c.attack.config.selection = attack::parse_selection(s); }}},
      {"attack.seed", TGADV_COUNT(attack.config.seed)},
      {"attack.kde_bandwidth", TGADV_NUM(attack.config.kde_bandwidth)},
      {"defense.variant",
       {[](const ExperimentConfig& c) { return defense::to_string(c.defense.variant); },
        [](ExperimentConfig& c, const std::string& s) { c.defense.variant = defense::parse_variant(s); }}},
      {"defense.tau_start", TGADV_NUM(defense.tau_start)},
      {"defense.tau_end", TGADV_NUM(defense.tau_end)},
      {"defense.lambda", TGADV_NUM(defense.lambda)},
      {"defense.theta", TGADV_NUM(defense.theta)},
      {"defense.svd_rank", TGADV_COUNT(defense.svd_rank)},
      {"defense.tau_cosine", TGADV_NUM(defense.tau_cosine)},
      {"model.memory_dim", TGADV_COUNT(model.memory_dim)},
      {"model.time_dim", TGADV_COUNT(model.time_dim)},
      {"model.heads", TGADV_COUNT(model.heads)},
      {"model.neighbors", TGADV_COUNT(model.neighbors)},
      {"model.dropout", TGADV_NUM(model.dropout)},
      {"train.learning_rate", TGADV_NUM(train.learning_rate)},
      {"train.batch_size", TGADV_COUNT(train.batch_size)},
      {"train.epochs", TGADV_COUNT(train.epochs)},
      {"train.patience", TGADV_COUNT(train.patience)},
      {"eval.seeds",
       {[](const ExperimentConfig& c) { return join_seeds(c.eval.seeds); },
        [](ExperimentConfig& c, const std::string& s) { c.eval.seeds = parse_seeds(s); }}},
      {"eval.k", TGADV_COUNT(eval.hit_k)},
      {"eval.negatives", TGADV_COUNT(eval.negatives)},
      {"output.dir",
       {[](const ExperimentConfig& c) { return c.output_dir.string(); },
        [](ExperimentConfig& c, const std::string& s) { c.output_dir = s; }}},
      {"output.overwrite", TGADV_BOOL(overwrite)},
  };
  return table;
}

#undef TGADV_NUM
#undef TGADV_COUNT
#undef TGADV_BOOL

inline constexpr const char* kColumnPrefix = "data.";

}  // namespace detail

inline auto ExperimentConfig::to_key_values() const -> KeyValues {
  KeyValues kv;
  for (const auto& [key, f] : detail::fields()) kv[key] = f.get(*this);
  if (columns_given) {
    for (const auto& [k, v] : columns.to_key_values()) kv[detail::kColumnPrefix + k] = v;
  }
  return kv;
}

/// Unknown keys are errors so typos cannot silently fall back to defaults.
inline auto ExperimentConfig::from_key_values(const KeyValues& kv) -> ExperimentConfig {
  ExperimentConfig c;
  KeyValues column_kv;
  const auto column_keys = ColumnMapping{}.to_key_values();
  for (const auto& [key, value] : kv) {
    if (auto it = detail::fields().find(key); it != detail::fields().end()) {
      try {
        it->second.set(c, value);
      } catch (const InputError& e) {
        throw InputError(key + ": " + e.what());
      }
      continue;
    }
    if (key.rfind(detail::kColumnPrefix, 0) == 0) {
      const auto sub = key.substr(std::string(detail::kColumnPrefix).size());
      if (column_keys.contains(sub)) {
        column_kv[sub] = value;
        continue;
      }
    }
    throw InputError("unknown config key '" + key + "'");
  }
  if (!column_kv.empty()) {
    c.columns = ColumnMapping::from_key_values(column_kv);
    c.columns_given = true;
  }
  return c;
}

/// Applies `key=value` overrides on top of a base config.
inline auto apply_overrides(const ExperimentConfig& base, const std::vector<std::string>& overrides)
    -> ExperimentConfig {
  auto kv = base.to_key_values();
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw InputError("override '" + o + "' is not key=value");
    kv[trim(o.substr(0, eq))] = trim(o.substr(eq + 1));
  }
  return ExperimentConfig::from_key_values(kv);
}

inline auto load_config(const std::filesystem::path& path) -> ExperimentConfig {
  return ExperimentConfig::from_key_values(read_key_values(path));
}

inline void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  write_key_values(path, cfg.to_key_values());
}

}  // namespace tgadv::pipeline
