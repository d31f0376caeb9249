#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/util/error.hpp"
#include "tgadv/util/kv.hpp"

namespace tgadv {

/// Where (u, v, t, features) live in an interaction CSV.
struct ColumnMapping {
  int u = 0;
  int v = 1;
  int t = 2;
  int feature_begin = 3;  // -1: no features
  int feature_end = -1;   // exclusive; -1: through the last column
  bool bipartite = false;
  /// Shift destination ids past the largest source id (JODIE-style files
  /// number users and items independently).
  bool reindex_destinations = false;

  [[nodiscard]] auto to_key_values() const -> KeyValues {
    return {{"bipartite", bipartite ? "true" : "false"},
            {"columns.u", std::to_string(u)},
            {"columns.v", std::to_string(v)},
            {"columns.t", std::to_string(t)},
            {"columns.feature_begin", std::to_string(feature_begin)},
            {"columns.feature_end", std::to_string(feature_end)},
            {"reindex_destinations", reindex_destinations ? "true" : "false"}};
  }

  static auto from_key_values(const KeyValues& kv) -> ColumnMapping {
    ColumnMapping m;
    auto get = [&kv](const char* key) -> std::optional<std::string> {
      if (auto it = kv.find(key); it != kv.end()) return it->second;
      return std::nullopt;
    };
    if (auto s = get("bipartite")) m.bipartite = parse_bool(*s);
    if (auto s = get("columns.u")) m.u = static_cast<int>(parse_int(*s));
    if (auto s = get("columns.v")) m.v = static_cast<int>(parse_int(*s));
    if (auto s = get("columns.t")) m.t = static_cast<int>(parse_int(*s));
    if (auto s = get("columns.feature_begin")) m.feature_begin = static_cast<int>(parse_int(*s));
    if (auto s = get("columns.feature_end")) m.feature_end = static_cast<int>(parse_int(*s));
    if (auto s = get("reindex_destinations")) m.reindex_destinations = parse_bool(*s);
    return m;
  }
};

namespace detail {

inline auto split_csv(std::string_view line) -> std::vector<std::string_view> {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline auto try_parse_double(std::string_view s, double& out) -> bool {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline auto parse_field(std::string_view s, int lineno, const char* what) -> double {
  double v = 0.0;
  if (!try_parse_double(s, v)) {
    throw InputError("line " + std::to_string(lineno) + ": non-numeric " + what + " field '" +
                     std::string(s) + "'");
  }
  return v;
}

inline auto parse_node(std::string_view s, int lineno) -> NodeId {
  const double v = parse_field(s, lineno, "node");
  if (v < 0 || v != static_cast<double>(static_cast<NodeId>(v))) {
    throw InputError("line " + std::to_string(lineno) + ": invalid node id '" + std::string(s) + "'");
  }
  return static_cast<NodeId>(v);
}

/// Shortest decimal text that parses back to the same double.
inline auto format_double(double x) -> std::string {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return {buf, ptr};
}

inline auto sidecar_path(const std::filesystem::path& csv) -> std::filesystem::path {
  return std::filesystem::path(csv.string() + ".meta");
}

}  // namespace detail

/// Reads an interaction CSV. A first row that does not parse as numbers is
/// treated as a header.
inline auto load_interactions(const std::filesystem::path& path, const ColumnMapping& schema,
                              NodeId num_nodes = -1) -> DynamicGraph {
  std::ifstream in(path);
  if (!in) throw InputError("missing file: " + path.string());
  std::vector<TemporalInteraction> rows;
  std::string line;
  int lineno = 0;
  bool first_row = true;
  long long feature_width = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv(line);
    const int needed = std::max({schema.u, schema.v, schema.t}) + 1;
    if (first_row) {
      first_row = false;
      double probe = 0.0;
      if (static_cast<int>(fields.size()) >= needed &&
          !detail::try_parse_double(fields[static_cast<std::size_t>(schema.t)], probe)) {
        continue;  // header
      }
    }
    if (static_cast<int>(fields.size()) < needed) {
      throw InputError("line " + std::to_string(lineno) + ": too few columns");
    }
    TemporalInteraction e;
    e.u = detail::parse_node(fields[static_cast<std::size_t>(schema.u)], lineno);
    e.v = detail::parse_node(fields[static_cast<std::size_t>(schema.v)], lineno);
    e.t = detail::parse_field(fields[static_cast<std::size_t>(schema.t)], lineno, "timestamp");
    if (e.t < 0.0) throw InputError("line " + std::to_string(lineno) + ": negative timestamp");
    if (schema.feature_begin >= 0) {
      const auto end = schema.feature_end < 0 ? static_cast<long long>(fields.size())
                                              : static_cast<long long>(schema.feature_end);
      const auto width = std::max(0LL, end - schema.feature_begin);
      if (end > static_cast<long long>(fields.size())) {
        throw InputError("line " + std::to_string(lineno) + ": ragged feature row");
      }
      if (feature_width < 0) feature_width = width;
      if (width != feature_width) {
        throw InputError("line " + std::to_string(lineno) + ": ragged feature row");
      }
      e.features.resize(width);
      for (long long j = 0; j < width; ++j) {
        e.features[j] = detail::parse_field(
            fields[static_cast<std::size_t>(schema.feature_begin + j)], lineno, "feature");
      }
    }
    rows.push_back(std::move(e));
  }
  if (rows.empty()) throw InputError("no interactions in " + path.string());
  if (schema.reindex_destinations) {
    NodeId max_u = 0;
    for (const auto& e : rows) max_u = std::max(max_u, e.u);
    for (auto& e : rows) e.v += max_u + 1;
  }
  return DynamicGraph(std::move(rows), schema.bipartite, num_nodes);
}

/// Reads an interaction CSV, taking the column mapping from its `.meta`
/// sidecar when one exists.
inline auto load_interactions(const std::filesystem::path& path) -> DynamicGraph {
  const auto meta = detail::sidecar_path(path);
  ColumnMapping schema;
  NodeId num_nodes = -1;
  if (std::filesystem::exists(meta)) {
    const auto kv = read_key_values(meta);
    schema = ColumnMapping::from_key_values(kv);
    if (auto it = kv.find("num_nodes"); it != kv.end()) num_nodes = parse_int(it->second);
  }
  return load_interactions(path, schema, num_nodes);
}

/// Writes `u,v,t[,f0,...]` plus a sidecar recording the layout.
inline void write_interactions(const std::filesystem::path& path, const DynamicGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "u,v,t";
  for (Eigen::Index j = 0; j < g.edge_dim(); ++j) out << ",f" << j;
  out << '\n';
  for (const auto& e : g.interactions()) {
    out << e.u << ',' << e.v << ',' << detail::format_double(e.t);
    for (Eigen::Index j = 0; j < e.features.size(); ++j) {
      out << ',' << detail::format_double(e.features[j]);
    }
    out << '\n';
  }
  ColumnMapping schema;
  schema.bipartite = g.bipartite();
  schema.feature_begin = g.edge_dim() > 0 ? 3 : -1;
  auto kv = schema.to_key_values();
  kv["num_nodes"] = std::to_string(g.num_nodes());
  write_key_values(detail::sidecar_path(path), kv);
}

/// Corrupted graph plus the batch each interaction belongs to.
struct ManifestData {
  DynamicGraph graph;
  std::vector<std::size_t> batch_ids;
};

/// Writes the perturbation manifest `u,v,t,is_adversarial,batch_id[,f...]`.
inline void write_perturbation_manifest(const std::filesystem::path& path, const DynamicGraph& g,
                                        const std::vector<std::size_t>& batch_ids) {
  if (batch_ids.size() != g.size()) throw InputError("batch id count does not match graph size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "u,v,t,is_adversarial,batch_id";
  for (Eigen::Index j = 0; j < g.edge_dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& e = g[i];
    out << e.u << ',' << e.v << ',' << detail::format_double(e.t) << ','
        << (e.is_adversarial ? 1 : 0) << ',' << batch_ids[i];
    for (Eigen::Index j = 0; j < e.features.size(); ++j) {
      out << ',' << detail::format_double(e.features[j]);
    }
    out << '\n';
  }
  write_key_values(detail::sidecar_path(path), {{"bipartite", g.bipartite() ? "true" : "false"},
                                                {"num_nodes", std::to_string(g.num_nodes())}});
}

inline auto load_perturbation_manifest(const std::filesystem::path& path) -> ManifestData {
  std::ifstream in(path);
  if (!in) throw InputError("missing file: " + path.string());
  bool bipartite = false;
  NodeId num_nodes = -1;
  if (const auto meta = detail::sidecar_path(path); std::filesystem::exists(meta)) {
    const auto kv = read_key_values(meta);
    if (auto it = kv.find("bipartite"); it != kv.end()) bipartite = parse_bool(it->second);
    if (auto it = kv.find("num_nodes"); it != kv.end()) num_nodes = parse_int(it->second);
  }
  std::vector<TemporalInteraction> rows;
  std::vector<std::size_t> batch_ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("u,", 0) == 0) continue;
    const auto f = detail::split_csv(line);
    if (f.size() < 5) throw InputError("line " + std::to_string(lineno) + ": too few columns");
    TemporalInteraction e;
    e.u = detail::parse_node(f[0], lineno);
    e.v = detail::parse_node(f[1], lineno);
    e.t = detail::parse_field(f[2], lineno, "timestamp");
    e.is_adversarial = detail::parse_field(f[3], lineno, "flag") != 0.0;
    batch_ids.push_back(static_cast<std::size_t>(detail::parse_node(f[4], lineno)));
    e.features.resize(static_cast<Eigen::Index>(f.size() - 5));
    for (std::size_t j = 5; j < f.size(); ++j) {
      e.features[static_cast<Eigen::Index>(j - 5)] = detail::parse_field(f[j], lineno, "feature");
    }
    rows.push_back(std::move(e));
  }
  if (rows.empty()) throw InputError("no interactions in " + path.string());
  // The manifest is written in chronological order, so the stable sort inside
  // DynamicGraph keeps rows (and therefore batch ids) aligned.
  return {DynamicGraph(std::move(rows), bipartite, num_nodes), std::move(batch_ids)};
}

}  // namespace tgadv
