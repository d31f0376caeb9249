#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"
#include "tgadv/tgnn/model.hpp"
#include "tgadv/util/error.hpp"

namespace tgadv::tgnn {

inline constexpr const char* kCheckpointFormat = "tgadv-checkpoint";

/// Model parameters plus the seeds that produced them and named scalars
/// (e.g. a defense's deployment threshold).
struct Checkpoint {
  TgnnModel model;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, double> scalars;
};

inline auto hyper_to_json(const TgnnHyper& h) -> nlohmann::ordered_json {
  return {{"memory_dim", h.memory_dim}, {"time_dim", h.time_dim},   {"edge_dim", h.edge_dim},
          {"heads", h.heads},           {"neighbors", h.neighbors}, {"layers", h.layers},
          {"dropout", h.dropout},       {"init_seed", h.init_seed}};
}

inline auto hyper_from_json(const nlohmann::ordered_json& j) -> TgnnHyper {
  TgnnHyper h;
  h.memory_dim = j.at("memory_dim").get<Index>();
  h.time_dim = j.at("time_dim").get<Index>();
  h.edge_dim = j.at("edge_dim").get<Index>();
  h.heads = j.at("heads").get<Index>();
  h.neighbors = j.at("neighbors").get<std::size_t>();
  h.layers = j.at("layers").get<std::size_t>();
  h.dropout = j.at("dropout").get<double>();
  h.init_seed = j.at("init_seed").get<std::uint64_t>();
  return h;
}

/// One JSON header line, then every parameter as raw little-endian float64
/// in header order.
inline void write_checkpoint(std::ostream& out, const TgnnModel& model,
                             const std::map<std::string, std::uint64_t>& seeds = {},
                             const std::map<std::string, double>& scalars = {}) {
  static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");
  nlohmann::ordered_json header;
  header["format"] = kCheckpointFormat;
  header["version"] = 1;
  header["hyper"] = hyper_to_json(model.hyper());
  header["seeds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : seeds) header["seeds"][k] = v;
  header["scalars"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : scalars) header["scalars"][k] = v;
  auto params = nlohmann::ordered_json::array();
  for (const auto* p : model.parameters()) {
    params.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  header["params"] = std::move(params);
  out << header.dump() << '\n';
  for (const auto* p : model.parameters()) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw InputError("checkpoint write failed");
}

inline auto read_checkpoint(std::istream& in) -> Checkpoint {
  std::string line;
  if (!std::getline(in, line)) throw InputError("checkpoint is empty");
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint header is not JSON: ") + e.what());
  }
  if (header.value("format", "") != kCheckpointFormat) throw InputError("not a tgadv checkpoint");
  if (header.value("version", 0) != 1) throw InputError("unsupported checkpoint version");
  Checkpoint ck{TgnnModel(hyper_from_json(header.at("hyper"))), {}, {}};
  for (const auto& [k, v] : header.at("seeds").items()) ck.seeds[k] = v.get<std::uint64_t>();
  for (const auto& [k, v] : header.at("scalars").items()) ck.scalars[k] = v.get<double>();
  const auto& listed = header.at("params");
  auto params = ck.model.parameters();
  if (listed.size() != params.size()) throw InputError("checkpoint parameter count does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    const auto& d = listed[i];
    if (d.at("name").get<std::string>() != p.name || d.at("rows").get<Index>() != p.value.rows() ||
        d.at("cols").get<Index>() != p.value.cols()) {
      throw InputError("checkpoint tensor " + d.at("name").get<std::string>() + " does not match " + p.name);
    }
    in.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw InputError("checkpoint truncated at " + p.name);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw InputError("checkpoint has trailing bytes");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const TgnnModel& model,
                            const std::map<std::string, std::uint64_t>& seeds = {},
                            const std::map<std::string, double>& scalars = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_checkpoint(out, model, seeds, scalars);
}

inline auto load_checkpoint(const std::filesystem::path& path) -> Checkpoint {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("missing file: " + path.string());
  return read_checkpoint(in);
}

}  // namespace tgadv::tgnn
